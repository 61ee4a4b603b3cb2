"""Deep-hybrid classifier: autoencoder latent space, PCA, kernel SVM."""

from .autoencoder import Autoencoder, AutoencoderConfig, encode, gradient_check, train_autoencoder
from .cv import CVReport, TrainerConfig, kfold_cv, loocv
from .metrics import compute_metrics
from .pca import PCAModel, fit_pca, transform_pca
from .scaling import Scaler, standardize_features
from .svm import KernelSpec, SVMModel, decision_function, platt_calibrate, predict_svm, train_svm

__all__ = [
    "Autoencoder", "AutoencoderConfig", "encode", "gradient_check", "train_autoencoder",
    "CVReport", "TrainerConfig", "kfold_cv", "loocv", "compute_metrics",
    "PCAModel", "fit_pca", "transform_pca", "Scaler", "standardize_features",
    "KernelSpec", "SVMModel", "decision_function", "platt_calibrate", "predict_svm", "train_svm",
]
