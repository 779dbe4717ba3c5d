"""Multi-frequency Helmholtz measurement sets and hybrid-imaging reconstructions."""
