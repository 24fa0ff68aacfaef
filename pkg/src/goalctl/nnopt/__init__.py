from goalctl.nnopt.mlp import MLP, apply, forward, init_params
from goalctl.nnopt.optim import AdamState, SoapState, adam_step, make_optimizer, soap_step
from goalctl.nnopt.tape import GradTape, backward, record, value_and_grad

__all__ = [
    "MLP", "apply", "forward", "init_params", "AdamState", "SoapState", "adam_step",
    "soap_step", "make_optimizer", "GradTape", "backward", "record", "value_and_grad",
]
