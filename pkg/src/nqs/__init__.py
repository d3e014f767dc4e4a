"""Neural-network quantum states: variational Monte Carlo on finite lattices."""

from . import (config, exact, hilbert, lattice, machine, operator, optimizer, output,
               sampler, stats, supervised, tomography, vmc)
from .exact import EdResult, full_ed, imaginary_time_propagation, lanczos_ed
from .hilbert import HilbertIndex, HilbertSpace, boson_space, spin_space
from .lattice import Graph, SymmetryGroup, custom_graph, hypercube, is_bipartite, translation_group
from .machine import (Ffnn, Jastrow, LookupMachine, Machine, RbmMultiVal, RbmSpin, RbmSpinSymm)
from .operator import (Operator, bose_hubbard, graph_operator, heisenberg, ising,
                       local_operator)
from .optimizer import (AdaDelta, AdaGrad, AdaMax, AmsGrad, Optimizer, RmsProp, Sgd,
                        complex_view, real_view)
from .output import read_log, read_wf, write_wf
from .sampler import (ExactSampler, MetropolisSampler, SamplerConfig, build_sampler,
                      exact_sample, run_sampler)
from .stats import SeriesStats, chain_statistics
from .supervised import SupervisedDataset, overlap_gradient, overlap_loss, run_supervised
from .tomography import (MeasurementRecord, fidelity, generate_measurements, nll_gradient,
                         nll_loss, rotated_log_amplitude, run_qsr)
from .vmc import (IterationResult, VmcConfig, estimate_energy, estimate_gradient,
                  exact_energy_and_gradient, local_energy, run_vmc, sr_update)

__version__ = "0.1.0"
