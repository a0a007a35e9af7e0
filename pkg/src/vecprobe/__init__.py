"""Multilingual word-representation probing with linear diagnostic classifiers."""

from .classifier import (
    Classifier,
    EvalResult,
    Gradients,
    TrainConfig,
    TrainReport,
    clip_gradients,
    encode,
    evaluate,
    forward,
    loss_and_grad,
    train,
)
from .embio import (
    EmbeddingTable,
    LayerBundle,
    LayerDescriptor,
    ParseReport,
    load_layer,
    open_bundle,
    parse_embedding_text,
    sniff_source,
    write_embedding_text,
)
from .probing_data import (
    Instance,
    OOVReport,
    ProbingDataset,
    ProbingTaskSpec,
    SyntheticSpec,
    TaskRegistry,
    default_registry,
    generate_synthetic,
    intersect_vocab,
    list_tasks,
    load_dataset,
    load_registry,
    majority_baseline,
    write_dataset,
)
from .runner import (
    CellResult,
    JobPlan,
    PlanSource,
    ProbeResult,
    Progress,
    plan_job,
    run_job,
    to_chart,
)

__version__ = "0.1.0"
