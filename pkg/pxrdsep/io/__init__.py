from pxrdsep.io.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from pxrdsep.io.cif import (
    dump_structure,
    parse_structure,
    read_dump,
    read_structure,
    write_cif,
)
from pxrdsep.io.mixtures import (
    read_mixture,
    read_mixture_set,
    write_mixture,
    write_mixture_set,
)
from pxrdsep.io.patterns import read_pattern, write_pattern
