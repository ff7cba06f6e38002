"""Pure-Python twin of the compiled kernels.

Every function here mirrors `pinf._kernels` operation for operation: the same
double-precision expressions in the same order, so the two backends produce
bit-identical results and backend selection never changes an output. Keep the
two files in lockstep when editing.

Buffers are flat: RGB images are `array('d')` of length 3*w*h (row-major,
interleaved channels), grayscale planes length w*h.
"""

from __future__ import annotations

from math import atan2, cos, floor, sin, sqrt

TWO_PI = 6.283185307179586
RAD2DEG = 57.29577951308232


def luminance(pix, w, h, out):
    """Rec.601 luma per pixel: 0.299 R + 0.587 G + 0.114 B.

    Written as B + 0.299 (R-B) + 0.587 (G-B), which is the same formula with
    weights summing exactly to one, so gray pixels keep their value bit-exact.
    """
    n = w * h
    for i in range(n):
        b = 3 * i
        bl = pix[b + 2]
        out[i] = bl + 0.299 * (pix[b] - bl) + 0.587 * (pix[b + 1] - bl)


def lum_stats(gray, n):
    """(mean, population std, fraction < 0.05, fraction > 0.95)."""
    s = 0.0
    lo = 0
    hi = 0
    for i in range(n):
        v = gray[i]
        s += v
        if v < 0.05:
            lo += 1
        if v > 0.95:
            hi += 1
    mean = s / n
    ss = 0.0
    for i in range(n):
        d = gray[i] - mean
        ss += d * d
    return mean, sqrt(ss / n), lo / n, hi / n


def laplacian_variance(gray, w, h):
    """Population variance of the 3x3 Laplacian over the valid region."""
    m = (w - 2) * (h - 2)
    s = 0.0
    for y in range(1, h - 1):
        row = y * w
        for x in range(1, w - 1):
            i = row + x
            r = (((gray[i - w] + gray[i + w]) + gray[i - 1]) + gray[i + 1]) - 4.0 * gray[i]
            s += r
    mean = s / m
    ss = 0.0
    for y in range(1, h - 1):
        row = y * w
        for x in range(1, w - 1):
            i = row + x
            r = (((gray[i - w] + gray[i + w]) + gray[i - 1]) + gray[i + 1]) - 4.0 * gray[i]
            d = r - mean
            ss += d * d
    return ss / m


def sobel_stats(gray, w, h, bh, bw, out):
    """Sobel-pass aggregates over the valid region.

    out[0]  mean gradient magnitude
    out[1]  mean magnitude over the border band (0 if band empty)
    out[2]  mean magnitude over the center (0 if empty)
    out[3]  sum of magnitude * cos(4*theta)   fourth harmonic: axis-periodic
    out[4]  sum of magnitude * sin(4*theta)
    out[5..12]  magnitude-weighted orientation histogram, 8 bins over [0, 180)
    """
    for k in range(13):
        out[k] = 0.0
    s = 0.0
    bsum = 0.0
    csum = 0.0
    cc = 0.0
    ss = 0.0
    nb = 0
    nc = 0
    for y in range(1, h - 1):
        row = y * w
        for x in range(1, w - 1):
            i = row + x
            gx = ((gray[i - w + 1] + 2.0 * gray[i + 1]) + gray[i + w + 1]) - (
                (gray[i - w - 1] + 2.0 * gray[i - 1]) + gray[i + w - 1]
            )
            gy = ((gray[i + w - 1] + 2.0 * gray[i + w]) + gray[i + w + 1]) - (
                (gray[i - w - 1] + 2.0 * gray[i - w]) + gray[i - w + 1]
            )
            mag = sqrt(gx * gx + gy * gy)
            s += mag
            if y < bh or y >= h - bh or x < bw or x >= w - bw:
                bsum += mag
                nb += 1
            else:
                csum += mag
                nc += 1
            if mag > 0.0:
                th = atan2(gy, gx)
                cc += mag * cos(4.0 * th)
                ss += mag * sin(4.0 * th)
                deg = th * RAD2DEG
                if deg < 0.0:
                    deg += 180.0
                if deg >= 180.0:
                    deg -= 180.0
                bin_ = int(deg / 22.5)
                if bin_ > 7:
                    bin_ = 7
                out[5 + bin_] += mag
    m = (w - 2) * (h - 2)
    out[0] = s / m
    out[1] = bsum / nb if nb > 0 else 0.0
    out[2] = csum / nc if nc > 0 else 0.0
    out[3] = cc
    out[4] = ss


def border_lum_diff(gray, w, h, bh, bw):
    """Mean border luminance minus mean center luminance."""
    bsum = 0.0
    csum = 0.0
    nb = 0
    nc = 0
    for y in range(h):
        row = y * w
        for x in range(w):
            v = gray[row + x]
            if y < bh or y >= h - bh or x < bw or x >= w - bw:
                bsum += v
                nb += 1
            else:
                csum += v
                nc += 1
    bm = bsum / nb if nb > 0 else 0.0
    cm = csum / nc if nc > 0 else 0.0
    return bm - cm


def block_stats(gray, w, h, grid, means, variances):
    """Per-block mean and population variance on a grid x grid partition."""
    for by in range(grid):
        y0 = (by * h) // grid
        y1 = ((by + 1) * h) // grid
        for bx in range(grid):
            x0 = (bx * w) // grid
            x1 = ((bx + 1) * w) // grid
            cnt = (y1 - y0) * (x1 - x0)
            s = 0.0
            for y in range(y0, y1):
                row = y * w
                for x in range(x0, x1):
                    s += gray[row + x]
            mean = s / cnt
            ss = 0.0
            for y in range(y0, y1):
                row = y * w
                for x in range(x0, x1):
                    d = gray[row + x] - mean
                    ss += d * d
            means[by * grid + bx] = mean
            variances[by * grid + bx] = ss / cnt


def saturation_mean(pix, w, h):
    """Mean per-pixel channel spread max(R,G,B) - min(R,G,B)."""
    n = w * h
    s = 0.0
    for i in range(n):
        b = 3 * i
        r = pix[b]
        g = pix[b + 1]
        bl = pix[b + 2]
        mx = r
        if g > mx:
            mx = g
        if bl > mx:
            mx = bl
        mn = r
        if g < mn:
            mn = g
        if bl < mn:
            mn = bl
        s += mx - mn
    return s / n


def shift_extend(pix, w, h, dx, dy, out):
    """Translate content by (dx, dy) pixels, extending edge pixels."""
    for y in range(h):
        sy = y - dy
        if sy < 0:
            sy = 0
        elif sy > h - 1:
            sy = h - 1
        for x in range(w):
            sx = x - dx
            if sx < 0:
                sx = 0
            elif sx > w - 1:
                sx = w - 1
            src = (sy * w + sx) * 3
            dst = (y * w + x) * 3
            out[dst] = pix[src]
            out[dst + 1] = pix[src + 1]
            out[dst + 2] = pix[src + 2]


def rotate_bilinear(pix, w, h, ca, sa, out):
    """Rotate about the image center, bilinear sampling, edge-extend fill."""
    cx = (w - 1) * 0.5
    cy = (h - 1) * 0.5
    for y in range(h):
        fy = y - cy
        for x in range(w):
            fx = x - cx
            sx = cx + ca * fx + sa * fy
            sy = cy - sa * fx + ca * fy
            if sx < 0.0:
                sx = 0.0
            elif sx > w - 1.0:
                sx = w - 1.0
            if sy < 0.0:
                sy = 0.0
            elif sy > h - 1.0:
                sy = h - 1.0
            x0 = int(floor(sx))
            y0 = int(floor(sy))
            tx = sx - x0
            ty = sy - y0
            x1 = x0 + 1
            if x1 > w - 1:
                x1 = w - 1
            y1 = y0 + 1
            if y1 > h - 1:
                y1 = h - 1
            p00 = (y0 * w + x0) * 3
            p01 = (y0 * w + x1) * 3
            p10 = (y1 * w + x0) * 3
            p11 = (y1 * w + x1) * 3
            dst = (y * w + x) * 3
            for c in range(3):
                top = (1.0 - tx) * pix[p00 + c] + tx * pix[p01 + c]
                bot = (1.0 - tx) * pix[p10 + c] + tx * pix[p11 + c]
                out[dst + c] = (1.0 - ty) * top + ty * bot


def blur_h(pix, w, h, wts, r, out):
    """Horizontal pass of a separable blur; edge-extend sampling."""
    for y in range(h):
        row = y * w
        for x in range(w):
            dst = (row + x) * 3
            for c in range(3):
                acc = 0.0
                for k in range(-r, r + 1):
                    xx = x + k
                    if xx < 0:
                        xx = 0
                    elif xx > w - 1:
                        xx = w - 1
                    acc += wts[k + r] * pix[(row + xx) * 3 + c]
                out[dst + c] = acc


def blur_v(pix, w, h, wts, r, out):
    """Vertical pass of a separable blur; edge-extend sampling."""
    for y in range(h):
        for x in range(w):
            dst = (y * w + x) * 3
            for c in range(3):
                acc = 0.0
                for k in range(-r, r + 1):
                    yy = y + k
                    if yy < 0:
                        yy = 0
                    elif yy > h - 1:
                        yy = h - 1
                    acc += wts[k + r] * pix[(yy * w + x) * 3 + c]
                out[dst + c] = acc


def scale_gain(pix, n3, g, out):
    for i in range(n3):
        out[i] = pix[i] * g


def blend_white(pix, n3, wt, out):
    for i in range(n3):
        out[i] = (1.0 - wt) * pix[i] + wt


def fill_rect(pix, w, h, x0, y0, x1, y1, r, g, b):
    """Set a solid rectangle [x0, x1) x [y0, y1), in place."""
    for y in range(y0, y1):
        row = y * w
        for x in range(x0, x1):
            dst = (row + x) * 3
            pix[dst] = r
            pix[dst + 1] = g
            pix[dst + 2] = b


def fill_gradient(pix, w, h, c0r, c0g, c0b, c1r, c1g, c1b, horizontal, amp, fx, fy):
    """Linear two-color gradient plus a low-amplitude sinusoidal ripple."""
    wd = float(w)
    hd = float(h)
    for y in range(h):
        row = y * w
        ty = y / (h - 1.0) if h > 1 else 0.0
        for x in range(w):
            t = (x / (w - 1.0) if w > 1 else 0.0) if horizontal else ty
            wave = amp * sin(TWO_PI * (fx * (x / wd) + fy * (y / hd)))
            dst = (row + x) * 3
            v = (c0r + (c1r - c0r) * t) + wave
            if v < 0.0:
                v = 0.0
            elif v > 1.0:
                v = 1.0
            pix[dst] = v
            v = (c0g + (c1g - c0g) * t) + wave
            if v < 0.0:
                v = 0.0
            elif v > 1.0:
                v = 1.0
            pix[dst + 1] = v
            v = (c0b + (c1b - c0b) * t) + wave
            if v < 0.0:
                v = 0.0
            elif v > 1.0:
                v = 1.0
            pix[dst + 2] = v


def draw_circle(pix, w, h, cx, cy, rad, r, g, b):
    """Fill a solid disk, in place."""
    rr = rad * rad
    y0 = int(floor(cy - rad))
    y1 = int(floor(cy + rad)) + 1
    x0 = int(floor(cx - rad))
    x1 = int(floor(cx + rad)) + 1
    if y0 < 0:
        y0 = 0
    if x0 < 0:
        x0 = 0
    if y1 > h:
        y1 = h
    if x1 > w:
        x1 = w
    for y in range(y0, y1):
        row = y * w
        dy = y - cy
        for x in range(x0, x1):
            dx = x - cx
            if dx * dx + dy * dy <= rr:
                dst = (row + x) * 3
                pix[dst] = r
                pix[dst + 1] = g
                pix[dst + 2] = b


def draw_triangle(pix, w, h, ax, ay, bx, by, cx, cy, r, g, b):
    """Fill a solid triangle (inclusive edges), in place."""
    minx = ax
    if bx < minx:
        minx = bx
    if cx < minx:
        minx = cx
    maxx = ax
    if bx > maxx:
        maxx = bx
    if cx > maxx:
        maxx = cx
    miny = ay
    if by < miny:
        miny = by
    if cy < miny:
        miny = cy
    maxy = ay
    if by > maxy:
        maxy = by
    if cy > maxy:
        maxy = cy
    x0 = int(floor(minx))
    x1 = int(floor(maxx)) + 1
    y0 = int(floor(miny))
    y1 = int(floor(maxy)) + 1
    if x0 < 0:
        x0 = 0
    if y0 < 0:
        y0 = 0
    if x1 > w:
        x1 = w
    if y1 > h:
        y1 = h
    for y in range(y0, y1):
        row = y * w
        for x in range(x0, x1):
            e0 = (bx - ax) * (y - ay) - (by - ay) * (x - ax)
            e1 = (cx - bx) * (y - by) - (cy - by) * (x - bx)
            e2 = (ax - cx) * (y - cy) - (ay - cy) * (x - cx)
            if (e0 >= 0.0 and e1 >= 0.0 and e2 >= 0.0) or (
                e0 <= 0.0 and e1 <= 0.0 and e2 <= 0.0
            ):
                dst = (row + x) * 3
                pix[dst] = r
                pix[dst + 1] = g
                pix[dst + 2] = b


def draw_checker(pix, w, h, x0, y0, size, cell, ar, ag, ab, br, bg, bb):
    """Fill a square checkerboard patch, in place."""
    y1 = y0 + size
    x1 = x0 + size
    if y1 > h:
        y1 = h
    if x1 > w:
        x1 = w
    yy0 = y0 if y0 > 0 else 0
    xx0 = x0 if x0 > 0 else 0
    for y in range(yy0, y1):
        row = y * w
        for x in range(xx0, x1):
            dst = (row + x) * 3
            if (((x - x0) // cell) + ((y - y0) // cell)) % 2 == 0:
                pix[dst] = ar
                pix[dst + 1] = ag
                pix[dst + 2] = ab
            else:
                pix[dst] = br
                pix[dst + 1] = bg
                pix[dst + 2] = bb


def quantize_u8(pix, n, out):
    """[0,1] doubles to 8-bit, round half up."""
    for i in range(n):
        iv = int(pix[i] * 255.0 + 0.5)
        if iv < 0:
            iv = 0
        elif iv > 255:
            iv = 255
        out[i] = iv


def u8_to_unit(buf, n, out):
    for i in range(n):
        out[i] = buf[i] / 255.0


def mlp_forward(w1, b1, w2, b2, nin, nh, nout, x, hbuf, out):
    """Two-layer perceptron: out = W2 relu(W1 x + b1) + b2."""
    for j in range(nh):
        hbuf[j] = b1[j]
    for i in range(nin):
        xi = x[i]
        base = i * nh
        for j in range(nh):
            hbuf[j] += xi * w1[base + j]
    for j in range(nh):
        if hbuf[j] < 0.0:
            hbuf[j] = 0.0
    for k in range(nout):
        out[k] = b2[k]
    for j in range(nh):
        hj = hbuf[j]
        base = j * nout
        for k in range(nout):
            out[k] += hj * w2[base + k]


def mlp_loss_grad(
    w1, b1, w2, b2, nin, nh, nout, xs, ys, nb, tw, gw1, gb1, gw2, gb2, hbuf, obuf, gobuf, ghbuf
):
    """Task-weighted squared-error loss and exact gradients over a batch.

    loss = (1/nb) * sum_samples sum_k tw[k] * (out_k - y_k)^2; gradient buffers
    must arrive zeroed and come back scaled by 1/nb. Scratch buffers hbuf,
    obuf, gobuf, ghbuf are overwritten.
    """
    loss = 0.0
    for s in range(nb):
        xoff = s * nin
        yoff = s * nout
        for j in range(nh):
            hbuf[j] = b1[j]
        for i in range(nin):
            xi = xs[xoff + i]
            base = i * nh
            for j in range(nh):
                hbuf[j] += xi * w1[base + j]
        for j in range(nh):
            if hbuf[j] < 0.0:
                hbuf[j] = 0.0
        for k in range(nout):
            obuf[k] = b2[k]
        for j in range(nh):
            hj = hbuf[j]
            base = j * nout
            for k in range(nout):
                obuf[k] += hj * w2[base + k]
        for k in range(nout):
            e = obuf[k] - ys[yoff + k]
            loss += tw[k] * (e * e)
            gobuf[k] = (2.0 * tw[k]) * e
        for k in range(nout):
            gb2[k] += gobuf[k]
        for j in range(nh):
            hj = hbuf[j]
            base = j * nout
            gh = 0.0
            for k in range(nout):
                gw2[base + k] += hj * gobuf[k]
                gh += w2[base + k] * gobuf[k]
            ghbuf[j] = gh if hbuf[j] > 0.0 else 0.0
        for i in range(nin):
            xi = xs[xoff + i]
            base = i * nh
            for j in range(nh):
                gw1[base + j] += xi * ghbuf[j]
        for j in range(nh):
            gb1[j] += ghbuf[j]
    inv = 1.0 / nb
    for i in range(nin * nh):
        gw1[i] *= inv
    for j in range(nh):
        gb1[j] *= inv
    for i in range(nh * nout):
        gw2[i] *= inv
    for k in range(nout):
        gb2[k] *= inv
    return loss * inv


def adam_step(p, g, m, v, n, lr, beta1, beta2, eps, bc1, bc2):
    """One Adam update in place; bc1/bc2 are the bias corrections 1-beta^t."""
    for i in range(n):
        gi = g[i]
        m[i] = beta1 * m[i] + (1.0 - beta1) * gi
        v[i] = beta2 * v[i] + (1.0 - beta2) * (gi * gi)
        mhat = m[i] / bc1
        vhat = v[i] / bc2
        p[i] = p[i] - lr * (mhat / (sqrt(vhat) + eps))
