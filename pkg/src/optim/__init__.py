from typing import Optional

from src.anchors.propagation import AnchorModel
from src.data.dataset import Dataset
from src.models.loss import LossModel
from src.models.prox import Regularizer
from src.optim.base import ALGORITHMS, Optimizer, RunConfig, SnapshotOptimizer
from src.optim.certificate import Certificate, certificate
from src.optim.s3gd import S3GD, run_s3gd
from src.optim.scv import SCV, run_scv
from src.optim.sgd import SGD, run_sgd
from src.optim.solver import SolverResult, minimize_composite
from src.optim.ssgd import SSGD, run_ssgd
from src.optim.svrg import ProxSVRG, run_svrg

OPTIMIZERS = {
    "sgd": SGD,
    "ssgd": SSGD,
    "svrg": ProxSVRG,
    "scv": SCV,
    "s3gd": S3GD,
}


def make_optimizer(
    cfg: RunConfig,
    ds: Dataset,
    loss: LossModel,
    reg: Regularizer,
    test: Optional[Dataset] = None,
    anchor_model: Optional[AnchorModel] = None,
) -> Optimizer:
    """Instantiate the optimizer named by ``cfg.algorithm``; only S3GD uses ``anchor_model``."""
    cls = OPTIMIZERS[cfg.validate().algorithm]
    if cls is S3GD:
        return S3GD(cfg, ds, loss, reg, test, anchor_model=anchor_model)
    return cls(cfg, ds, loss, reg, test)


__all__ = [
    "ALGORITHMS",
    "OPTIMIZERS",
    "Certificate",
    "Optimizer",
    "ProxSVRG",
    "RunConfig",
    "S3GD",
    "SCV",
    "SGD",
    "SSGD",
    "SnapshotOptimizer",
    "SolverResult",
    "certificate",
    "make_optimizer",
    "minimize_composite",
    "run_s3gd",
    "run_scv",
    "run_sgd",
    "run_ssgd",
    "run_svrg",
]
