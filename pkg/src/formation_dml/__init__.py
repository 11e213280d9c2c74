"""Formation-versus-formation causal effects with categorical-treatment DML."""

__version__ = "0.1.0"
