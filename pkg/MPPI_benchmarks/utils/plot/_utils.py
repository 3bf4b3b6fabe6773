"""
MPPI BENCHMARKS - UTILS - PLOT - UTILS

Heat map helpers for sweep grids.
"""

__all__ = [
    'annotate_heatmap',
    'heatmap',
    'plot_sweep_heatmap'
]

from typing import Any, Dict, List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use('Agg')

import matplotlib.pyplot as plt
import matplotlib.ticker
import numpy as np


def heatmap(
        data: 'np.ndarray',
        row_labels: Sequence[str],
        col_labels: Sequence[str],
        ax=None,
        cbarlabel: str = '',
        cbar_kw: Optional[Dict[str, Any]] = None,
        gridwidth: float = 3.0,
        **kwargs
) -> Tuple[Any, Any]:
    """
    Draws a labelled (rows, cols) grid with a color bar. Cells are separated
    by white minor grid lines.

    :param data: Values, shape (len(row_labels), len(col_labels))
    :param row_labels: Row tick labels
    :param col_labels: Column tick labels
    :param ax: Axes, the current axes if None
    :param cbarlabel: Color bar label, no color bar if None
    :param cbar_kw: Arguments forwarded to ``colorbar``
    :param gridwidth: Cell separator width, none if 0
    :param kwargs: Arguments forwarded to ``imshow``
    :return: Image and color bar
    """
    assert data.shape == (len(row_labels), len(col_labels)), 'labels do not match the grid'
    ax = plt.gca() if ax is None else ax
    im = ax.imshow(data, **kwargs)
    cbar = None
    if cbarlabel is not None:
        cbar = ax.figure.colorbar(im, ax=ax, **(cbar_kw or {}))
        cbar.ax.set_ylabel(cbarlabel, rotation=-90, va='bottom')

    rows, cols = data.shape
    ax.set_xticks(np.arange(cols), labels=list(col_labels))
    ax.set_yticks(np.arange(rows), labels=list(row_labels))
    for spine in ax.spines.values():
        spine.set_visible(False)
    if gridwidth > 0:
        ax.set_xticks(np.arange(cols + 1) - 0.5, minor=True)
        ax.set_yticks(np.arange(rows + 1) - 0.5, minor=True)
        ax.grid(which='minor', color='w', linestyle='-', linewidth=gridwidth)
        ax.tick_params(which='minor', bottom=False, left=False)
    return im, cbar


# noinspection PyDefaultArgument
def annotate_heatmap(
        im,
        data: Optional['np.ndarray'] = None,
        valfmt: Any = '{x:.1f}',
        textcolors=['black', 'white'],
        threshold: Optional[float] = None,
        **textkw
) -> List[Any]:
    """
    Writes each cell value over a heat map. NaN cells are left blank.

    :param im: Image returned by :func:`heatmap`
    :param data: Values, the image array if None
    :param valfmt: Format string or matplotlib formatter
    :param textcolors: Colors below/above the threshold
    :param threshold: Color threshold in data units, middle of the range if None
    :param textkw: Arguments forwarded to ``text``
    :return: Text artists
    """
    if not isinstance(data, (list, np.ndarray)):
        data = im.get_array()
    data = np.asarray(data, dtype=float)

    if threshold is not None:
        threshold = im.norm(threshold)
    else:
        threshold = im.norm(np.nanmax(data)) / 2.

    kw = dict(horizontalalignment='center', verticalalignment='center')
    kw.update(textkw)

    if isinstance(valfmt, str):
        valfmt = matplotlib.ticker.StrMethodFormatter(valfmt)

    texts = []
    for i in range(data.shape[0]):
        for j in range(data.shape[1]):
            if not np.isfinite(data[i, j]):
                continue
            kw.update(color=textcolors[int(im.norm(data[i, j]) > threshold)])
            texts.append(im.axes.text(j, i, valfmt(data[i, j], None), **kw))
    return texts


def plot_sweep_heatmap(
        nu_values: Sequence[float],
        k_values: Sequence[int],
        grid: 'np.ndarray',
        path: str,
        title: str = '',
        cbarlabel: str = 'Average running cost'
) -> str:
    """
    Saves the exploration variance by rollout count grid of a sweep.

    :param nu_values: Row values (exploration variance)
    :param k_values: Column values (rollouts)
    :param grid: Mean cost per cell, shape (len(nu), len(K))
    :param path: Output image file
    :param title: Figure title
    :param cbarlabel: Color bar label
    :return: Path written
    """
    grid = np.asarray(grid, dtype=float)
    assert grid.shape == (len(nu_values), len(k_values)), 'grid shape does not match sweep values'
    fig, ax = plt.subplots(figsize=(1.2 * len(k_values) + 3, 0.8 * len(nu_values) + 2))
    im, _ = heatmap(grid, [f'{v:g}' for v in nu_values], [str(k) for k in k_values], ax=ax,
                    cmap='viridis_r', cbarlabel=cbarlabel)
    annotate_heatmap(im, grid)
    ax.set_xlabel('Rollouts K')
    ax.set_ylabel('Exploration variance ν')
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
