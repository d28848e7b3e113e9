"""instructforge: curate seed functions from a code corpus, self-generate
instruction/response/test triples through a pluggable model backend, and
keep only responses validated by sandboxed test execution."""

__version__ = "0.1.0"
