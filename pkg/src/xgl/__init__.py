"""Interactive learning lab: black-box classifiers, rule-based global
explanations, guided annotation protocols, and teaching-oracle experiments."""

from .dataset import (
    Dataset,
    FoldSplit,
    PreprocessSpec,
    build_dataset,
    generate_synthetic,
    inject_uu,
    load_and_preprocess,
    stratified_kfold,
)
from .explain import Rule, RuleSet, SurrogateParams, distill, predict_with_rules, score_rules
from .learners import ModelSpec, TrainedModel, fit, predict, predict_proba
from .metrics import macro_f1, narrative_bias_experimental, narrative_bias_formal
from .protocols import (
    LoopState,
    SupervisorSim,
    run_loop,
    select_guided,
    select_random,
    select_representative,
    select_uncertain,
    select_xgl,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "FoldSplit",
    "PreprocessSpec",
    "build_dataset",
    "generate_synthetic",
    "inject_uu",
    "load_and_preprocess",
    "stratified_kfold",
    "Rule",
    "RuleSet",
    "SurrogateParams",
    "distill",
    "predict_with_rules",
    "score_rules",
    "ModelSpec",
    "TrainedModel",
    "fit",
    "predict",
    "predict_proba",
    "macro_f1",
    "narrative_bias_experimental",
    "narrative_bias_formal",
    "LoopState",
    "SupervisorSim",
    "run_loop",
    "select_guided",
    "select_random",
    "select_representative",
    "select_uncertain",
    "select_xgl",
]
