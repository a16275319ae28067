"""Inverse price-volume signature analytics for trade data."""

from ._core import (
    Archetype,
    ConfigError,
    DataError,
    DilutionResult,
    FeatureVector,
    Forecast,
    SignatureResult,
    basel_overlap,
    compute_features,
    detect_signature_codes,
    dilution_model,
    duty_gap,
    elbow_scan,
    forecast_linear,
    kmeans_fit,
    mean_abs_shap,
    ols_slope,
    RandomForest,
    synth_corpus,
    feature_names,
    zscore,
)

__all__ = [name for name in dir() if not name.startswith("_")]
