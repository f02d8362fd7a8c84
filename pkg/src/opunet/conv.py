"""2-D convolution and transposed convolution as autodiff ops.

Both use the cross-correlation convention (no kernel flip) with zero
padding, and both are lowered to one big matmul: im2col gathers input
windows into a (N*oh*ow, Cin*kh*kw) matrix, col2im is its exact adjoint
(scatter-add). The transposed convolution forward IS the adjoint of the
plain convolution, built from the same two primitives with the roles of
gather and scatter swapped — so its input gradient comes back out as a
plain forward convolution with the same kernel.

Strategy note: the im2col+matmul lowering is an internal choice; tests pin
both ops to an independent nested-loop reference.
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, _check_same_dtype, _result


def conv2d_out_size(size, k, stride, padding):
    return (size + 2 * padding - k) // stride + 1


def conv_transpose2d_out_size(size, k, stride, padding, output_padding):
    return (size - 1) * stride - 2 * padding + k + output_padding


def im2col(x, kh, kw, stride, padding):
    """(N, C, H, W) -> (N*oh*ow, C*kh*kw) window matrix."""
    n, c, h, w = x.shape
    oh = conv2d_out_size(h, kh, stride, padding)
    ow = conv2d_out_size(w, kw, stride, padding)
    if padding:
        x = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    win = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(2, 3))
    win = win[:, :, ::stride, ::stride]          # (N, C, oh, ow, kh, kw)
    return np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5)).reshape(n * oh * ow, c * kh * kw)


def col2im(col, out_shape, kh, kw, stride, padding, grid_hw):
    """Adjoint of im2col: scatter-add windows back onto an image.

    col: (N*gh*gw, C*kh*kw) where (gh, gw) = grid_hw is the window grid.
    out_shape: (N, C, H, W) of the target image before padding removal.
    """
    n, c, h, w = out_shape
    gh, gw = grid_hw
    colr = col.reshape(n, gh, gw, c, kh, kw).transpose(0, 3, 4, 5, 1, 2)
    buf = np.zeros((n, c, h + 2 * padding, w + 2 * padding), dtype=col.dtype)
    for y in range(kh):
        ylim = y + stride * gh
        for x in range(kw):
            xlim = x + stride * gw
            buf[:, :, y:ylim:stride, x:xlim:stride] += colr[:, :, y, x]
    if padding:
        return buf[:, :, padding:padding + h, padding:padding + w]
    return buf


def _check_conv_args(stride, padding):
    if not isinstance(stride, (int, np.integer)) or stride < 1:
        raise ValueError(f"stride must be a positive integer, got {stride!r}")
    if not isinstance(padding, (int, np.integer)) or padding < 0:
        raise ValueError(f"padding must be a non-negative integer, got {padding!r}")


def conv2d(x: Tensor, w: Tensor, bias: Tensor | None = None, stride=1, padding=0) -> Tensor:
    """Strided 2-D cross-correlation. x: (N,Cin,H,W), w: (Cout,Cin,kh,kw)."""
    _check_conv_args(stride, padding)
    if x.data.ndim != 4 or w.data.ndim != 4:
        raise ValueError("conv2d: x must be (N,Cin,H,W) and w (Cout,Cin,kh,kw)")
    n, cin, h, wd = x.shape
    cout, cin_w, kh, kw = w.shape
    if cin != cin_w:
        raise ValueError(f"conv2d: input has {cin} channels but kernel expects {cin_w}")
    if kh > h + 2 * padding or kw > wd + 2 * padding:
        raise ValueError(f"conv2d: kernel {kh}x{kw} larger than padded input {h + 2 * padding}x{wd + 2 * padding}")
    parents = (x, w) if bias is None else (x, w, bias)
    _check_same_dtype("conv2d", *parents)
    if bias is not None and bias.shape != (cout,):
        raise ValueError(f"conv2d: bias shape {bias.shape} != ({cout},)")

    oh = conv2d_out_size(h, kh, stride, padding)
    ow = conv2d_out_size(wd, kw, stride, padding)
    col = im2col(x.data, kh, kw, stride, padding)          # (N*oh*ow, Cin*kh*kw)
    wc = w.data.reshape(cout, -1)
    out = col @ wc.T
    if bias is not None:
        out += bias.data
    out = out.reshape(n, oh, ow, cout).transpose(0, 3, 1, 2)

    def bwd(g):
        gr = np.ascontiguousarray(g.transpose(0, 2, 3, 1)).reshape(-1, cout)
        dw = (gr.T @ col).reshape(w.shape)
        dx = col2im(gr @ wc, (n, cin, h, wd), kh, kw, stride, padding, (oh, ow))
        if bias is None:
            return dx, dw
        return dx, dw, gr.sum(axis=0)

    return _result(np.ascontiguousarray(out), parents, bwd, "conv2d")


def conv_transpose2d(x: Tensor, w: Tensor, bias: Tensor | None = None,
                     stride=1, padding=0, output_padding=0) -> Tensor:
    """Transposed 2-D convolution (adjoint of conv2d with the same geometry).

    x: (N,Cin,H,W), w: (Cin,Cout,kh,kw). Output spatial size is
    (H-1)*stride - 2*padding + kh + output_padding.
    """
    _check_conv_args(stride, padding)
    if not isinstance(output_padding, (int, np.integer)) or output_padding < 0:
        raise ValueError(f"output_padding must be a non-negative integer, got {output_padding!r}")
    if output_padding >= stride:
        raise ValueError(f"output_padding ({output_padding}) must be smaller than stride ({stride})")
    if x.data.ndim != 4 or w.data.ndim != 4:
        raise ValueError("conv_transpose2d: x must be (N,Cin,H,W) and w (Cin,Cout,kh,kw)")
    n, cin, h, wd = x.shape
    cin_w, cout, kh, kw = w.shape
    if cin != cin_w:
        raise ValueError(f"conv_transpose2d: input has {cin} channels but kernel expects {cin_w}")
    parents = (x, w) if bias is None else (x, w, bias)
    _check_same_dtype("conv_transpose2d", *parents)
    if bias is not None and bias.shape != (cout,):
        raise ValueError(f"conv_transpose2d: bias shape {bias.shape} != ({cout},)")

    oh = conv_transpose2d_out_size(h, kh, stride, padding, output_padding)
    ow = conv_transpose2d_out_size(wd, kw, stride, padding, output_padding)
    if oh < 1 or ow < 1:
        raise ValueError(f"conv_transpose2d: computed output size {oh}x{ow} is empty")

    wc = w.data.reshape(cin, cout * kh * kw)
    xr = np.ascontiguousarray(x.data.transpose(0, 2, 3, 1)).reshape(-1, cin)   # (N*H*W, Cin)
    out = col2im(xr @ wc, (n, cout, oh, ow), kh, kw, stride, padding, (h, wd))
    if bias is not None:
        out += bias.data.reshape(1, cout, 1, 1)

    def bwd(g):
        gcol = im2col(g, kh, kw, stride, padding)          # (N*H*W, Cout*kh*kw)
        dx = (gcol @ wc.T).reshape(n, h, wd, cin).transpose(0, 3, 1, 2)
        dw = (xr.T @ gcol).reshape(w.shape)
        if bias is None:
            return np.ascontiguousarray(dx), dw
        return np.ascontiguousarray(dx), dw, g.sum(axis=(0, 2, 3))

    return _result(out, parents, bwd, "conv_transpose2d")
