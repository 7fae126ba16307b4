import pandas as pd

# --- Constants ---

REQUIRED_COLUMNS_TRACE = ["t", "index", "x", "y", "kappa", "arclen"]

REQUIRED_COLUMNS_DIAGNOSTICS = [
    "t",
    "s_index",
    "kappa",
    "u_ss",
    "h_eps_spatial",
    "h_eps_timediff",
]

MAX_ERRORS = 10


class FormatError(ValueError):
    """Malformed input file (missing columns, non-numeric values, empty data)."""


# --- Validation Functions ---

def _cap(errors, what):
    if len(errors) > MAX_ERRORS:
        errors = errors[:MAX_ERRORS] + [f"... and {len(errors) - MAX_ERRORS} more {what} errors."]
    return errors


def validate_columns(df, required_columns, filename):
    """
    Checks if all required columns are present in the dataframe.
    Returns a list of error strings.
    """
    errors = []
    missing = [col for col in required_columns if col not in df.columns]
    if missing:
        errors.append(f"{filename}: Missing required columns: {', '.join(missing)}")
    return errors


def validate_numeric(df, num_cols, filename):
    """
    Checks that the given columns hold finite numbers.
    Returns a list of errors (row numbers are 1-based file lines, header = 1).
    """
    errors = []
    for col in num_cols:
        if col not in df.columns:
            continue
        values = pd.to_numeric(df[col], errors="coerce")
        bad = values.isna() | ~values.abs().lt(float("inf"))
        for idx in df.index[bad]:
            errors.append(f"{filename} (Row {idx + 2}): Non-numeric value in '{col}': '{df.at[idx, col]}'")
    return _cap(errors, "numeric")


def validate_frame(df, required_columns, filename):
    """Runs the column and numeric checks; raises FormatError with every message."""
    if df.empty:
        raise FormatError(f"{filename}: no rows")
    errors = validate_columns(df, required_columns, filename)
    if not errors:
        errors = validate_numeric(df, required_columns, filename)
    if errors:
        raise FormatError("\n".join(errors))
    return df
