"""Cross-fitted double machine learning for the formation effect matrix."""
from .artifacts import RUN_FILES, diagnostics_text, read_grid, write_grid, write_run_artifacts
from .crossfit import DegenerateColumnError, ResidualSet, column_name, cross_fit_residuals, task_seed
from .final_stage import (
    P_REFERENCES,
    SE_VARIANTS,
    FinalStage,
    RankDeficiencyError,
    final_stage_ols,
    sandwich_cov,
    two_sided_p,
)
from .matrix import (
    OMITTED_MARK,
    BetaMatrix,
    assemble_matrix,
    cell_count_grid,
    estimate_home_effect,
    format_cell,
    side_adjust,
    significance_stars,
)
from .pipeline import (
    ConfigError,
    Diagnostics,
    PipelineResult,
    RunConfig,
    antisymmetry_within_bound,
    orthogonality_report,
    run_pipeline,
)
