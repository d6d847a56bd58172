from .experiment import (
    AuthCellResult,
    CellResult,
    ExperimentConfig,
    Report,
    build_subdataset,
    emit_report,
    load_report,
    run_authentication_experiment,
    run_classification_experiment,
    split_dataset,
)
from .manifest import Manifest, load_manifest, load_stack_dir, save_manifest
from .synthetic import (
    segmentation_suite_config,
    SynthConfig,
    TypeParams,
    default_type_params,
    make_grain_corpus,
    render_field,
    synth_grain_record,
    synth_stack,
)

__all__ = [
    "AuthCellResult",
    "CellResult",
    "ExperimentConfig",
    "Manifest",
    "Report",
    "SynthConfig",
    "TypeParams",
    "build_subdataset",
    "default_type_params",
    "emit_report",
    "load_manifest",
    "load_report",
    "load_stack_dir",
    "make_grain_corpus",
    "render_field",
    "segmentation_suite_config",
    "run_authentication_experiment",
    "run_classification_experiment",
    "save_manifest",
    "split_dataset",
    "synth_grain_record",
    "synth_stack",
]
