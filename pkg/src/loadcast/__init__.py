"""loadcast: short-term electricity load forecasting.

A multiplicative exponential-smoothing component deseasonalizes each hourly
series on the fly while a dilated recurrent network, trained across all
series at once, forecasts the next day's 24 hours together with a 90%
prediction interval and per-step corrections to the smoothing coefficients.
"""

from ._kernels import BACKEND_NAME

__version__ = "0.1.0"
__all__ = ["BACKEND_NAME", "__version__"]
