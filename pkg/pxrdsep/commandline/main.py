#!/usr/bin/env python
"""
Simulate powder diffraction libraries, train the decomposition network and
decompose multiphase patterns.

Examples
--------
Render 20 patterns per structure from a directory of CIF files::

    > pxrdsep simulate cifs/ --out library/

Train on the library and score the result on held-out mixtures::

    > pxrdsep pretrain library/ --out stage1/
    > pxrdsep train library/ --pretrained stage1/pretrain.ckpt --out stage2/
    > pxrdsep mix library/ --split test --out test/
    > pxrdsep index library/ --out test/
    > pxrdsep evaluate test/mixtures --checkpoint stage2/model.ckpt \\
          --index test/index.pxi --out report/

Decompose measured patterns and inspect the results in an IPython shell::

    > pxrdsep decompose sample.xy --checkpoint stage2/model.ckpt --embed

Run the whole pipeline at toy scale::

    > pxrdsep smoke --out smoke/

Every command reads an optional ``--config`` INI file and writes the
resolved configuration into its output directory.

Usage Details
-------------
"""
import argparse
import dataclasses
import glob
import logging
import os
import sys
from dataclasses import replace
from functools import partial

import numpy as np

from pxrdsep.algorithms.simulate import (
    SimConfig,
    render_pattern,
    sample_sim_config,
    structure_key,
)
from pxrdsep.commandline.toydata import write_toy_cifs
from pxrdsep.config import (
    format_value,
    load_config,
    override_sim,
    write_resolved_config,
)
from pxrdsep.errors import (
    EmptyInput,
    IncompatibleCheckpoint,
    IncompatibleGrid,
    PxrdsepError,
)
from pxrdsep.evaluation.report import evaluate_run
from pxrdsep.evaluation.retrieval import build_index, read_index_file, write_index
from pxrdsep.io.checkpoint import load_checkpoint
from pxrdsep.io.cif import dump_structure, read_structure
from pxrdsep.io.common import parallel_map, set_loglevel
from pxrdsep.io.mixtures import (
    MIXTURE_SUFFIX,
    read_mixture,
    read_mixture_set,
    write_mixture_set,
)
from pxrdsep.io.patterns import read_pattern, read_two_column, write_pattern_text
from pxrdsep.mixing.library import (
    preprocess_pattern,
    read_library,
    safe_filename,
    write_render_set,
)
from pxrdsep.mixing.sampling import epoch_mixtures
from pxrdsep.mixing.split import read_manifest, split_by_crystal, write_manifest
from pxrdsep.model.decomposer import Decomposer
from pxrdsep.model.pretrain import MaskedPretrainer
from pxrdsep.pattern import DiffractionPattern
from pxrdsep.training.stages import TrainLog, run_stage1, run_stage2

logger = logging.getLogger("ps.cli")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

SPLIT_FILE = "split.txt"
FAILURES_FILE = "failures.txt"
TRAIN_LOG = "train_log.txt"
PRETRAIN_CHECKPOINT = "pretrain.ckpt"
MODEL_CHECKPOINT = "model.ckpt"
INDEX_FILE = "index.pxi"

# Namespace prefix of the generated [sim] override flags
SIM_PREFIX = "sim_"

BOLD = "\033[1m"
END = "\033[0m"


class ArgumentParser(argparse.ArgumentParser):
    """Parser whose usage errors exit with :data:`EXIT_USAGE`"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def sim_flag(name):
    """Command-line flag of a SimConfig field (``seed`` is ``--sim-seed``)"""
    if name == "seed":
        return "--sim-seed"
    return "--" + name.replace("_", "-")


def add_sim_flags(parser):
    """Add one optional flag per SimConfig field, overriding ``[sim]``"""
    group = parser.add_argument_group(
        "simulation settings", "Override [sim] entries of the configuration"
    )
    for f in dataclasses.fields(SimConfig):
        group.add_argument(
            sim_flag(f.name),
            dest=SIM_PREFIX + f.name,
            metavar=f.name.upper(),
            help=f"default: {format_value(f.default)}",
        )


def sim_overrides(args):
    """Text values of the ``[sim]`` flags given on the command line"""
    return {
        key[len(SIM_PREFIX) :]: value
        for key, value in vars(args).items()
        if key.startswith(SIM_PREFIX) and value is not None
    }


def parse_arguments():
    """Parse commandline arguments"""

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with [run], [sim], ... sections")
    common.add_argument("--seed", type=int, help="Global seed (overrides [run])")
    common.add_argument("--out", default=".", help="Output directory")
    common.add_argument("--threads", type=int, help="Parallel workers (needs ray)")
    common.add_argument(
        "-v", "--verbose", action="store_true", default=None, help="Log at DEBUG level"
    )

    parser = ArgumentParser(
        prog="pxrdsep",
        formatter_class=argparse.RawTextHelpFormatter,
        description=__doc__,
    )
    commands = parser.add_subparsers(dest="command", parser_class=ArgumentParser)
    commands.required = True

    sim = commands.add_parser(
        "simulate", parents=[common], help="Render a pattern library from CIF files"
    )
    sim.add_argument("cif_dir", help="Directory of CIF files")
    add_sim_flags(sim)

    mix = commands.add_parser(
        "mix", parents=[common], help="Write synthetic mixtures from a library"
    )
    mix.add_argument("library", help="Directory written by `pxrdsep simulate`")
    mix.add_argument(
        "--split", default="test", help="Split to mix (train, val, test or all)"
    )
    mix.add_argument("--epoch", type=int, default=0, help="Mixture stream index")

    prep = commands.add_parser(
        "prep", parents=[common], help="Resample and background-correct patterns"
    )
    prep.add_argument("patterns", nargs="+", help="Two-column (2θ, I) text files")

    pre = commands.add_parser(
        "pretrain", parents=[common], help="Masked-reconstruction pretraining"
    )
    pre.add_argument("library", help="Directory written by `pxrdsep simulate`")

    train = commands.add_parser(
        "train", parents=[common], help="Decomposition training"
    )
    train.add_argument("library", help="Directory written by `pxrdsep simulate`")
    train.add_argument("--pretrained", help="Checkpoint written by `pxrdsep pretrain`")

    dec = commands.add_parser(
        "decompose", parents=[common], help="Decompose patterns with a checkpoint"
    )
    dec.add_argument("inputs", nargs="+", help="Pattern files or directories")
    dec.add_argument("--checkpoint", required=True, help="Trained model checkpoint")
    dec.add_argument("--tau", type=float, help="Activity threshold")
    dec.add_argument(
        "--raw", action="store_true", help="Use raw instead of EMA weights"
    )
    dec.add_argument(
        "--embed",
        action="store_true",
        help="Start an IPython shell with the decompositions",
    )

    index = commands.add_parser(
        "index", parents=[common], help="Build a retrieval index from a library"
    )
    index.add_argument("library", help="Directory written by `pxrdsep simulate`")
    index.add_argument("--split", default="all", help="Split to index")

    ev = commands.add_parser(
        "evaluate", parents=[common], help="Score a checkpoint on test mixtures"
    )
    ev.add_argument("mixtures", help="Directory of .pxm mixture files")
    ev.add_argument("--checkpoint", required=True, help="Trained model checkpoint")
    ev.add_argument("--index", help="Retrieval index for Top-k scoring")
    ev.add_argument(
        "--embed", action="store_true", help="Start an IPython shell with the report"
    )

    commands.add_parser(
        "smoke", parents=[common], help="Run the whole pipeline at toy scale"
    )
    return parser


def _render_structure(structure, base, n_renders, seed, fixed=()):
    rng = np.random.default_rng([int(seed), structure_key(structure.id)])
    renders = []
    for r in range(n_renders):
        pattern, _ = render_pattern(structure, sample_sim_config(rng, base, fixed))
        renders.append((structure.id, r, pattern.normalized()))
    return renders


def simulate(cif_dir, out, cfg):
    """
    Render ``n_per_crystal`` patterns per parsable structure.

    Files that fail to parse or render are listed in ``failures.txt``.

    Raises
    ------
    EmptyInput
        If no structure could be rendered
    """
    paths = sorted(glob.glob(os.path.join(cif_dir, "*.cif")))
    structures, failures, seen = [], [], set()
    for path in paths:
        try:
            structure = read_structure(path)
        except PxrdsepError as err:
            logger.warning(f"Skipping {path}: {type(err).__name__}: {err}")
            failures.append((path, type(err).__name__, str(err)))
            continue
        if structure.id in seen:
            failures.append((path, "DuplicateIds", f"id {structure.id!r} repeated"))
            continue
        seen.add(structure.id)
        structures.append(structure)

    render = partial(
        _render_structure,
        base=cfg.sim,
        n_renders=cfg.run.n_per_crystal,
        seed=cfg.run.seed,
        fixed=cfg.run.fixed_conditions,
    )
    renders = []
    for structure, result in zip(
        structures, parallel_map(_guarded(render), structures, cfg.run.threads)
    ):
        if isinstance(result, PxrdsepError):
            failures.append((structure.id, type(result).__name__, str(result)))
        else:
            renders.extend(result)

    os.makedirs(os.path.join(out, "structures"), exist_ok=True)
    for structure in structures:
        name = f"{safe_filename(structure.id)}.txt"
        with open(os.path.join(out, "structures", name), "w") as f:
            f.write(dump_structure(structure))
    with open(os.path.join(out, FAILURES_FILE), "w") as f:
        for source, kind, message in failures:
            f.write(f"{source}\t{kind}\t{message}\n")
    if not renders:
        raise EmptyInput(f"No structure in {cif_dir} could be rendered")

    index = write_render_set(out, renders)
    ids = sorted(set(index["id"]))
    write_manifest(
        split_by_crystal(ids, cfg.run.split_ratios, cfg.run.seed),
        os.path.join(out, SPLIT_FILE),
    )
    print(f"Rendered {len(index)} patterns of {len(ids)} structures; "
          f"{len(failures)} failures")
    return index


def _guarded(func):
    return partial(_call_guarded, func)


def _call_guarded(func, item):
    try:
        return func(item)
    except PxrdsepError as err:
        return err


def split_ids(library_dir, split):
    """Crystal ids of a split; every id when the split is "all" or empty"""
    path = os.path.join(library_dir, SPLIT_FILE)
    if split == "all" or not os.path.exists(path):
        return None
    manifest = read_manifest(path)
    ids = manifest[split]
    if not ids:
        logger.warning(f"Split {split!r} is empty; using the whole library")
        return None
    return ids


def load_split(library_dir, split, seed):
    return read_library(library_dir, seed=seed, ids=split_ids(library_dir, split))


def mix(library_dir, out, cfg, split="test", epoch=0):
    library = load_split(library_dir, split, cfg.run.seed)
    samples = epoch_mixtures(library, epoch, cfg.run.seed, cfg.data)
    paths = write_mixture_set(os.path.join(out, "mixtures"), samples)
    print(f"Wrote {len(paths)} mixtures of {len(library)} phases")
    return samples


def prep(paths, out, cfg):
    """Resample experimental patterns onto the model grid and remove background"""
    grid = cfg.sim.grid
    os.makedirs(out, exist_ok=True)
    written = []
    for path in paths:
        angles, intensities = read_two_column(path)
        signal, background = preprocess_pattern(angles, intensities, grid)
        stem = os.path.splitext(os.path.basename(path))[0]
        target = os.path.join(out, f"{stem}.txt")
        write_pattern_text(signal, target, header=f"source={path}")
        write_pattern_text(
            DiffractionPattern.on_grid(grid, background),
            os.path.join(out, f"{stem}_background.txt"),
        )
        written.append(target)
    print(f"Prepared {len(written)} patterns on {grid}")
    return written


def pretrain(library_dir, out, cfg):
    library = load_split(library_dir, "train", cfg.run.seed)
    val_ids = split_ids(library_dir, "val")
    val_library = None
    if val_ids is not None:
        val_library = read_library(library_dir, seed=cfg.run.seed, ids=val_ids)
    model = MaskedPretrainer(cfg.model, seed=cfg.run.seed)
    result = run_stage1(
        library,
        model,
        cfg.train,
        cfg.weights,
        val_library=val_library,
        log=TrainLog(os.path.join(out, TRAIN_LOG)),
        checkpoint_path=os.path.join(out, PRETRAIN_CHECKPOINT),
    )
    best = min(h["val_loss"] for h in result.history)
    print(f"Pretraining finished; best validation loss {best:.6g}")
    return result


def train(library_dir, out, cfg, pretrained=None):
    library = load_split(library_dir, "train", cfg.run.seed)
    val_ids = split_ids(library_dir, "val")
    val_library = None
    if val_ids is not None and len(val_ids) >= cfg.data.n_max:
        val_library = read_library(library_dir, seed=cfg.run.seed, ids=val_ids)

    encoder = None
    if pretrained is not None:
        checkpoint = load_checkpoint(pretrained)
        if checkpoint.kind != "pretrainer":
            raise IncompatibleCheckpoint(
                f"{pretrained} holds a {checkpoint.kind}, expected a pretrainer"
            )
        encoder = checkpoint.build(use_ema=False)

    model = Decomposer(cfg.model, seed=cfg.run.seed)
    result = run_stage2(
        library,
        model,
        cfg.train,
        cfg.weights,
        cfg.data,
        pretrained=encoder,
        val_library=val_library,
        log=TrainLog(os.path.join(out, TRAIN_LOG)),
        checkpoint_path=os.path.join(out, MODEL_CHECKPOINT),
    )
    print(f"Training finished; final loss {result.losses[-1]:.6g}")
    return result


def load_model(path, use_ema=True):
    checkpoint = load_checkpoint(path)
    if checkpoint.kind != "decomposer":
        raise IncompatibleCheckpoint(
            f"{path} holds a {checkpoint.kind}, expected a decomposer"
        )
    return checkpoint, checkpoint.build(use_ema=use_ema)


def read_input(path):
    """A pattern file, or the mixed pattern of a mixture file"""
    if path.endswith(MIXTURE_SUFFIX):
        return read_mixture(path).mixed
    return read_pattern(path)


def _pattern_files(inputs):
    files = []
    for item in inputs:
        if os.path.isdir(item):
            files.extend(
                sorted(
                    p
                    for p in glob.glob(os.path.join(item, "*"))
                    if os.path.isfile(p) and not p.endswith(".ini")
                )
            )
        else:
            files.append(item)
    if not files:
        raise EmptyInput("No pattern files given")
    return files


def decompose(inputs, checkpoint_path, out, cfg, tau=None, use_ema=True):
    """
    Decompose each pattern and write per-slot components.

    Every input gets a directory holding ``slot_<k>.txt``,
    ``reconstruction.txt`` and ``activities.txt``.

    Raises
    ------
    IncompatibleGrid
        If a pattern is not sampled on the checkpoint's grid
    """
    checkpoint, model = load_model(checkpoint_path, use_ema)
    tau = cfg.eval.tau if tau is None else tau
    results = {}
    for path in _pattern_files(inputs):
        pattern = read_input(path)
        if checkpoint.grid is not None:
            grid_min, step, length = checkpoint.grid
            expected = DiffractionPattern(grid_min, step, np.zeros(length)).grid
            if not pattern.grid.is_compatible(expected):
                raise IncompatibleGrid(
                    f"{path} is sampled on {pattern.grid}, the model on {expected}"
                )
        result = model.decompose(pattern.intensities, tau)
        stem = os.path.splitext(os.path.basename(path))[0]
        directory = os.path.join(out, stem)
        os.makedirs(directory, exist_ok=True)
        for k, component in enumerate(result.components):
            write_pattern_text(
                DiffractionPattern.on_grid(pattern.grid, component),
                os.path.join(directory, f"slot_{k}.txt"),
                header=f"activity={result.activities[k]:.6f}",
            )
        write_pattern_text(
            DiffractionPattern.on_grid(pattern.grid, result.reconstruction),
            os.path.join(directory, "reconstruction.txt"),
        )
        with open(os.path.join(directory, "activities.txt"), "w") as f:
            f.write(f"# tau = {tau}\n")
            for k, p in enumerate(result.activities):
                f.write(f"{k} {p:.10g} {int(k in result.active)}\n")
        probs = " ".join(f"{p:.3f}" for p in result.activities)
        print(f"{stem}: active={list(result.active)} p=[{probs}]")
        results[stem] = result
    return results


def index(library_dir, out, cfg, split="all"):
    library = load_split(library_dir, split, cfg.run.seed)
    retrieval_index = build_index(library, cfg.eval.candidates)
    os.makedirs(out, exist_ok=True)
    write_index(retrieval_index, os.path.join(out, INDEX_FILE))
    print(f"Indexed {len(retrieval_index)} references")
    return retrieval_index


def evaluate(mixtures_dir, checkpoint_path, out, cfg, index_path=None):
    _, model = load_model(checkpoint_path, cfg.eval.use_ema)
    samples = read_mixture_set(mixtures_dir)
    retrieval_index = None if index_path is None else read_index_file(index_path)
    report = evaluate_run(
        model,
        samples,
        retrieval_index,
        cfg.eval,
        cfg.weights,
        plot_dir=os.path.join(out, "plots"),
        threads=cfg.run.threads,
    )
    report.write(out)
    print(report.to_text())
    return report


def smoke(out, cfg):
    """
    Run simulate, mix, index, pretrain, train, decompose and evaluate on the
    built-in toy structures.

    Returns
    -------
    (int, str or None)
        Exit code and the name of the failing stage
    """
    cfg = smoke_config(cfg)
    write_resolved_config(cfg, out)
    library_dir = os.path.join(out, "library")
    test_dir = os.path.join(out, "test")
    stage1_dir = os.path.join(out, "stage1")
    stage2_dir = os.path.join(out, "stage2")
    stages = [
        ("simulate", lambda: simulate(toy_cif_dir(out), library_dir, cfg)),
        ("mix", lambda: mix(library_dir, test_dir, cfg, split="all", epoch=0)),
        ("index", lambda: index(library_dir, test_dir, cfg)),
        ("pretrain", lambda: pretrain(library_dir, stage1_dir, cfg)),
        (
            "train",
            lambda: train(
                library_dir,
                stage2_dir,
                cfg,
                os.path.join(stage1_dir, PRETRAIN_CHECKPOINT),
            ),
        ),
        (
            "freeze-check",
            lambda: check_frozen_encoder(
                os.path.join(stage1_dir, PRETRAIN_CHECKPOINT),
                os.path.join(stage2_dir, MODEL_CHECKPOINT),
            ),
        ),
        (
            "decompose",
            lambda: decompose(
                [os.path.join(test_dir, "mixtures")],
                os.path.join(stage2_dir, MODEL_CHECKPOINT),
                os.path.join(out, "decompositions"),
                cfg,
            ),
        ),
        (
            "evaluate",
            lambda: evaluate(
                os.path.join(test_dir, "mixtures"),
                os.path.join(stage2_dir, MODEL_CHECKPOINT),
                os.path.join(out, "report"),
                cfg,
                os.path.join(test_dir, INDEX_FILE),
            ),
        ),
    ]
    for name, stage in stages:
        logger.info(f"smoke: {name}")
        try:
            stage()
        except PxrdsepError as err:
            print(f"smoke failed at stage {name}: {type(err).__name__}: {err}")
            return EXIT_DATA, name
        except Exception as err:
            print(f"smoke failed at stage {name}: {type(err).__name__}: {err}")
            return EXIT_INTERNAL, name
    print("smoke passed")
    return EXIT_OK, None


def check_frozen_encoder(pretrain_path, model_path):
    """
    Raises
    ------
    IncompatibleCheckpoint
        If the attention encoder of the trained model (raw or EMA weights)
        differs from the pretrained one
    """
    source = load_checkpoint(pretrain_path).params
    target = load_checkpoint(model_path)
    names = [k for k in source if k.startswith("encoder.")]
    for weights in (target.params, target.ema or {}):
        for name in names:
            if name in weights and not np.array_equal(weights[name], source[name]):
                raise IncompatibleCheckpoint(f"Frozen parameter {name} changed")


def toy_cif_dir(out):
    directory = os.path.join(out, "cifs")
    write_toy_cifs(directory)
    return directory


def smoke_config(cfg):
    """Shrink a configuration to the smoke-run scale"""
    return replace(
        cfg,
        run=replace(cfg.run, n_per_crystal=2, split_ratios=(0.8, 0.1, 0.1)),
        data=replace(cfg.data, n_min=2, n_max=3, n_samples=8),
        train=replace(
            cfg.train, batch_size=4, pretrain_epochs=2, epochs=2, warmup_epochs=1
        ),
        eval=replace(cfg.eval, candidates=6, top_k=6),
    )


def run(args):
    cfg = load_config(args.config).with_run(
        seed=args.seed, threads=args.threads, verbose=args.verbose
    )
    set_loglevel(cfg.run.verbose)
    out = args.out
    if args.command == "smoke":
        os.makedirs(out, exist_ok=True)
        code, _ = smoke(out, cfg)
        return code

    if args.command == "simulate":
        cfg = override_sim(cfg, sim_overrides(args))
    write_resolved_config(cfg, out)
    if args.command == "simulate":
        simulate(args.cif_dir, out, cfg)
    elif args.command == "mix":
        mix(args.library, out, cfg, args.split, args.epoch)
    elif args.command == "prep":
        prep(args.patterns, out, cfg)
    elif args.command == "pretrain":
        pretrain(args.library, out, cfg)
    elif args.command == "train":
        train(args.library, out, cfg, args.pretrained)
    elif args.command == "decompose":
        results = decompose(
            args.inputs, args.checkpoint, out, cfg, args.tau, use_ema=not args.raw
        )
        if args.embed:
            from IPython import embed

            print()
            embed(
                colors="neutral",
                header=f"DecompositionResults stored in {BOLD}results{END} dictionary",
            )
    elif args.command == "index":
        index(args.library, out, cfg, args.split)
    elif args.command == "evaluate":
        report = evaluate(args.mixtures, args.checkpoint, out, cfg, args.index)
        if args.embed:
            from IPython import embed

            print()
            embed(colors="neutral", header=f"EvalReport stored as {BOLD}report{END}")
    return EXIT_OK


def main(argv=None):
    parser = parse_arguments()
    args = parser.parse_args(argv)
    try:
        return run(args)
    except PxrdsepError as err:
        print(f"pxrdsep {args.command}: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_DATA
    except Exception as err:
        logger.exception(err)
        print(f"pxrdsep {args.command}: internal error: {err}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
