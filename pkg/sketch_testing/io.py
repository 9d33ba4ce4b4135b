"""CSV readers for design matrices and responses, and the power-row CSV writer."""
import csv

import numpy as np

from .exceptions import DimensionError
from .harness import CSV_COLUMNS
from .sketch import TwoSampleData


def read_matrix_csv(path, header=False):
    """Plain numeric CSV, one observation per row; ``header`` skips the first line."""
    try:
        matrix = np.loadtxt(path, delimiter=',', ndmin=2, skiprows=1 if header else 0)
    except OSError as exc:
        raise DimensionError(f'cannot read {path}: {exc}') from exc
    except ValueError as exc:
        raise DimensionError(f'{path} is not a numeric CSV: {exc}') from exc
    if matrix.size == 0:
        raise DimensionError(f'{path} holds no data')
    return matrix


def read_vector_csv(path, header=False):
    matrix = read_matrix_csv(path, header=header)
    if matrix.shape[1] != 1:
        raise DimensionError(
            f'{path} must hold a single column of responses, found {matrix.shape[1]} columns'
        )
    return matrix[:, 0]


def read_two_sample(x1, y1, x2, y2, header=False):
    return TwoSampleData(
        X1=read_matrix_csv(x1, header=header),
        X2=read_matrix_csv(x2, header=header),
        Y1=read_vector_csv(y1, header=header),
        Y2=read_vector_csv(y2, header=header),
    )


def write_power_rows(rows, stream):
    """Write ``rows`` under the fixed column order, header first."""
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(row.as_csv_row())
