"""BlockCampus: a self-contained permissioned PoA blockchain for an academic Q&A community."""

__version__ = "0.1.0"
