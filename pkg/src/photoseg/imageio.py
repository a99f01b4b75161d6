"""Image and CSV I/O: binary PGM write, PGM/PNG read, simple line charts."""

import csv

import numpy as np


def write_pgm(path, image):
    """Write an 8-bit grayscale binary PGM (P5). Values are clipped/rounded."""
    arr = np.asarray(image)
    if arr.dtype == bool:
        arr = arr.astype(np.float64) * 255.0
    data = np.clip(np.round(arr), 0, 255).astype(np.uint8)
    h, w = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def read_pgm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    i = 0
    while len(tokens) < 4:
        if data[i:i + 1] == b"#":
            i = data.index(b"\n", i) + 1
            continue
        j = i
        while data[j:j + 1] not in b" \t\n\r":
            j += 1
        if j > i:
            tokens.append(data[i:j])
        i = j + 1
    if tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM file")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval > 255:
        raise ValueError(f"{path}: only 8-bit PGM supported")
    pixels = np.frombuffer(data[i:i + w * h], dtype=np.uint8)
    return pixels.reshape(h, w).astype(np.float64)


def read_image(path):
    """Read a grayscale image (PGM directly, anything else through Pillow)."""
    path = str(path)
    if path.lower().endswith(".pgm"):
        return read_pgm(path)
    from PIL import Image
    with Image.open(path) as img:
        return np.asarray(img.convert("L"), dtype=np.float64)


def read_mask(path):
    return read_image(path) >= 128


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def overlay_contour(image, mask, value=255.0):
    """Burn the mask's inner boundary into a copy of the image."""
    mask = np.asarray(mask, dtype=bool)
    interior = mask.copy()
    interior[1:, :] &= mask[:-1, :]
    interior[:-1, :] &= mask[1:, :]
    interior[:, 1:] &= mask[:, :-1]
    interior[:, :-1] &= mask[:, 1:]
    out = np.asarray(image, dtype=np.float64).copy()
    out[mask & ~interior] = value
    return out


def render_line_chart(xs, ys, width=256, height=128, margin=8):
    """Rasterize a polyline into a white-on-black image array."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    img = np.zeros((height, width))
    x_span = xs.max() - xs.min() or 1.0
    y_span = ys.max() - ys.min() or 1.0
    px = margin + (xs - xs.min()) / x_span * (width - 1 - 2 * margin)
    py = (height - 1 - margin
          - (ys - ys.min()) / y_span * (height - 1 - 2 * margin))
    for i in range(len(px) - 1):
        steps = int(max(abs(px[i + 1] - px[i]), abs(py[i + 1] - py[i]))) + 1
        t = np.linspace(0.0, 1.0, steps + 1)
        cc = np.round(px[i] + t * (px[i + 1] - px[i])).astype(int)
        rr = np.round(py[i] + t * (py[i + 1] - py[i])).astype(int)
        img[np.clip(rr, 0, height - 1), np.clip(cc, 0, width - 1)] = 255.0
    return img
