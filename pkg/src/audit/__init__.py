from src.audit.adapters import (
    AuxAdapter,
    BlackBoxAdapter,
    BuiltinKind,
    ForestAdapter,
    HttpAdapter,
    ProcessAdapter,
    parse_probabilities,
    train_builtin,
    train_lr,
    train_lr_fixed_a,
    train_rf,
)
from src.audit.harness import (
    AuditData,
    audit_datasets,
    audit_table,
    feature_columns,
    run_audit,
    sanity_check,
)
from src.audit.summary import describe_report

__all__ = [
    "AuditData",
    "AuxAdapter",
    "BlackBoxAdapter",
    "BuiltinKind",
    "ForestAdapter",
    "HttpAdapter",
    "ProcessAdapter",
    "audit_datasets",
    "audit_table",
    "describe_report",
    "feature_columns",
    "parse_probabilities",
    "run_audit",
    "sanity_check",
    "train_builtin",
    "train_lr",
    "train_lr_fixed_a",
    "train_rf",
]
