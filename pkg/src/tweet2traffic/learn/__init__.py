from .optimizers import LinearModel, fit_l1_logistic, fit_lasso, sigmoid  # noqa: F401
