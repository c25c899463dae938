"""Identify ``A*`` in ``X[t+1] = phi(A* X[t]) + eta[t]`` from a single trajectory."""
from .errors import (AggregationError, ConfigError, DivergenceError, LayoutError, MissingNoiseError,
                     NLDSError, NonExpansiveLinkError)
from .layout import BufferLayout
from .link import LinkFunction, identity, leaky_relu, logistic, parse_link, relu
from .loss import (GramMatrix, empirical_gram, frob_sq_error, proxy_grad, proxy_loss, squared_loss)
from .offline import glmtron, median_of_means_fit, metric_median, quasi_newton, theory_iters
from .report import FitReport, Status
from .sim import (NoiseModel, SystemSpec, Trajectory, bernoulli_ar_simulate, coupled_trajectory,
                  rand_bimod, relu_lb_matrix, simulate)
from .stream import (StreamConfig, default_gap, forward_sgd, l1_project, log_step_size,
                     projected_sgd_glm, sgd_dd, sgd_er, sgd_rer)

__version__ = "0.1.0"
