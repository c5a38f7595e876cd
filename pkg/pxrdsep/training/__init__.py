from pxrdsep.training.losses import (
    LossWeights,
    activity_bce,
    amplitude_term,
    geometry_term,
    loss_separation,
    mixture_consistency,
    pretrain_loss,
    separation_costs,
    separation_loss,
    si_sdr,
)
from pxrdsep.training.optim import EMA, AdamW, cosine_schedule
from pxrdsep.training.pit import activity_labels, best_assignment, pit_match
from pxrdsep.training.stages import (
    StageResult,
    TrainConfig,
    TrainLog,
    loss_total,
    run_stage1,
    run_stage2,
    transfer_encoder,
)
