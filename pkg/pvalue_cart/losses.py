import numpy as np


def mse_loss(target, pred):
    return float(np.mean((np.asarray(target) - np.asarray(pred)) ** 2))


def rmse_loss(target, pred):
    return float(np.sqrt(mse_loss(target, pred)))


def sse_loss(target, pred):
    return float(np.sum((np.asarray(target) - np.asarray(pred)) ** 2))
