from pvalue_cart.simlab.experiments import (
    DEFAULT_N_GRID,
    ExperimentResult,
    experiment_boosting,
    experiment_cv_contrast,
    experiment_detection,
    experiment_neufeld,
    experiment_neufeld_recovery,
    experiment_null_cdf,
    experiment_penalty_sweep,
)
from pvalue_cart.simlab.generators import (
    AltConfig,
    NeufeldConfig,
    NullConfig,
    gen_alt,
    gen_neufeld,
    gen_null,
    neufeld_mean,
    stepsize_amplitude,
)
from pvalue_cart.simlab.streams import substream
