from pxrdsep.autograd.gradcheck import finite_diff_check, relative_error
from pxrdsep.autograd.ops import (
    abs,
    clip,
    concat,
    conv1d,
    detach,
    dropout,
    embedding_lookup,
    exp,
    gelu,
    layer_norm,
    log,
    overlap_add,
    relu,
    scaled_dot_attention,
    sigmoid,
    softmax,
    softplus,
    sqrt,
    straight_through,
    take,
    upsample,
)
from pxrdsep.autograd.tensor import (
    Tensor,
    as_tensor,
    expand,
    get_default_dtype,
    is_grad_enabled,
    no_grad,
    parameter,
    set_debug,
    set_default_dtype,
)
