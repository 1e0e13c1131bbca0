class ValidationError(Exception):
    """Bad input data or configuration; maps to exit code 1 in the CLI."""
