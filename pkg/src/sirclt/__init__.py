"""Second-order asymptotics of linear CDMA receivers and MP spectral statistics."""
from .model import EntryDist, Ensemble, ModelParams, sample_ensemble
from .moments import mp_moment, scaled_h, shifted_a, mp_support
from .formulas import hankel_system, mmse_limit, CltPrediction

__version__ = "0.1.0"
