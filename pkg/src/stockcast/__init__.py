"""Technical-indicator features, tree ensembles and neural regressors for index forecasting."""

__version__ = "0.1.0"
