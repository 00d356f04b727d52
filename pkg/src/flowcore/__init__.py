from .subnet import SubNet, activate, activation_derivative, subnet_forward
from .network import (
    CouplingBlock, InvertibleNet, ForwardTrace, BlockTrace,
    block_forward, block_inverse, net_forward, net_inverse,
    beta, squared_norms, log_likelihood, loss_batch, param_count,
    init_net, zero_net,
)
from .gradients import loss_gradients, loss_and_gradients, batch_loss_gradients, backward
