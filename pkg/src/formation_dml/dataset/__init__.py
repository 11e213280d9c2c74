"""Fixture ingestion, strength features, filters and perspective expansion."""
from .fixtures import (
    CANONICAL_FIELDS,
    Fixture,
    Reject,
    SchemaError,
    filter_rounds,
    filter_stages,
    fixture_problems,
    load_column_mapping,
    parse_fixture_table,
    write_fixture_table,
    write_rejects,
)
from .formations import (
    GROUP_INDEX,
    GROUP_LABELS,
    UnmappedFormationError,
    default_mapping,
    formation_problem,
    group_formation,
    load_formation_mapping,
)
from .strength import StrengthFeatures, compute_strength_features, competition_ranks, strength_table
from .table import (
    TARGETS,
    AnalysisRow,
    AnalysisTable,
    ConfounderEncoder,
    build_analysis_table,
    expand_perspectives,
    prepare_analysis_table,
    target_difference,
)
