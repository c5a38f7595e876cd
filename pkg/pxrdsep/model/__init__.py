from pxrdsep.model.config import ModelConfig
from pxrdsep.model.decomposer import (
    Decomposer,
    DecompositionResult,
    ForwardOutput,
    SlotOutputs,
    film_modulate,
    reconstruct,
    slot_attend,
    spatial_competition,
)
from pxrdsep.model.layers import Module
from pxrdsep.model.pretrain import MaskedPretrainer, mae_pretrain_forward
