"""Lossless PNG figures: image grids and scatter plots stamped with the config hash."""

from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import torch  # noqa: E402
from PIL import Image  # noqa: E402
from PIL.PngImagePlugin import PngInfo  # noqa: E402
from torchvision.utils import make_grid  # noqa: E402

from ..domain.exceptions import ShapeMismatchError  # noqa: E402

CONFIG_HASH_KEY = "config_hash"
COLUMNS_KEY = "columns"
GRID_PADDING = 2


def std_to_image(std: np.ndarray) -> np.ndarray:
    """Scale a standard deviation image to [0, 1] by its maximum."""
    std = np.asarray(std, dtype=np.float32)
    peak = float(std.max()) if std.size else 0.0
    return std / peak if peak > 0 else np.zeros_like(std)


def _as_chw(image: np.ndarray, channels: int) -> torch.Tensor:
    tensor = torch.as_tensor(np.asarray(image, dtype=np.float32))
    if tensor.dim() == 2:
        tensor = tensor.unsqueeze(0)
    if tensor.shape[0] == 1 and channels == 3:
        tensor = tensor.expand(3, -1, -1)
    return tensor.clamp(0.0, 1.0)


def compose_grid(rows: Sequence[Sequence[Optional[np.ndarray]]]) -> np.ndarray:
    """
    Tile rows of (C, H, W) images in [0, 1] into one uint8 (H, W, C) array.

    Every row needs the same number of cells; a None cell stays blank.
    """
    if not rows or not rows[0]:
        raise ValueError("A grid needs at least one row and one column")
    width = len(rows[0])
    if any(len(row) != width for row in rows):
        raise ShapeMismatchError("All grid rows need the same number of cells")

    cells = [cell for row in rows for cell in row if cell is not None]
    if not cells:
        raise ValueError("A grid needs at least one image")
    shape = np.asarray(cells[0]).shape[-2:]
    rgb = any(np.asarray(c).ndim == 3 and np.asarray(c).shape[0] == 3 for c in cells)
    channels = 3 if rgb else 1

    tiles: List[torch.Tensor] = []
    for row in rows:
        for cell in row:
            if cell is None or np.asarray(cell).shape[-2:] != shape:
                tiles.append(torch.zeros(channels, *shape))
            else:
                tiles.append(_as_chw(cell, channels))
    grid = make_grid(
        torch.stack(tiles), nrow=width, padding=GRID_PADDING, pad_value=1.0
    )
    array = (grid.permute(1, 2, 0).numpy() * 255.0).round().astype(np.uint8)
    return array[:, :, :1] if channels == 1 else array


def save_png(
    image: np.ndarray, path: Union[str, Path], metadata: Dict[str, str]
) -> Path:
    """Write a uint8 (H, W, C) array as PNG with text chunks."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    info = PngInfo()
    for key, value in sorted(metadata.items()):
        info.add_text(key, value)
    mode = "L" if image.shape[2] == 1 else "RGB"
    Image.fromarray(image[:, :, 0] if mode == "L" else image, mode=mode).save(
        path, format="PNG", pnginfo=info
    )
    return path


def read_png_metadata(path: Union[str, Path]) -> Dict[str, str]:
    """Text chunks of a PNG file."""
    with Image.open(path) as image:
        image.load()
        return dict(getattr(image, "text", {}))


def render_sample_grid(
    rows: Sequence[Sequence[Optional[np.ndarray]]],
    columns: Sequence[str],
    path: Union[str, Path],
    config_hash: str,
) -> Path:
    """
    Save a grid whose rows are conditioning inputs and whose columns are
    truth, observation, the sigma ladder, mean and std.
    """
    if rows and len(columns) != len(rows[0]):
        raise ShapeMismatchError(
            f"{len(columns)} column labels for rows of {len(rows[0])} cells"
        )
    return save_png(
        compose_grid(rows),
        path,
        {CONFIG_HASH_KEY: config_hash, COLUMNS_KEY: ",".join(columns)},
    )


def render_scatter(
    series: Dict[str, np.ndarray],
    path: Union[str, Path],
    config_hash: str,
    title: str = "",
    axes: Tuple[int, int] = (0, 1),
) -> Path:
    """Scatter the first two coordinates of every point cloud in ``series``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(5, 5))
    try:
        for label, points in series.items():
            points = np.asarray(points, dtype=np.float64).reshape(len(points), -1)
            if points.shape[1] == 1:
                ys = np.zeros(len(points))
            else:
                ys = points[:, axes[1]]
            size = 40 if len(points) <= 4 else 5
            ax.scatter(points[:, axes[0]], ys, s=size, alpha=0.6, label=label)
        ax.set_title(title)
        ax.legend(loc="best")
        ax.set_aspect("equal", adjustable="datalim")
        metadata = {CONFIG_HASH_KEY: config_hash}
        fig.savefig(path, format="png", dpi=100, metadata=metadata)
    finally:
        plt.close(fig)
    return path
