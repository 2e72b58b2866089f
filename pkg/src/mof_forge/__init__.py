"""mof-forge: desk-scale orchestration engine for MOF simulation workflows."""

__version__ = "0.1.0"
