# Compiled zero-run RLE kernel. Token stream: 0x00 + u16le run length (1..65535)
# encodes a run of zero bytes; any other byte is a literal.

def rle_compress(data):
    cdef const unsigned char[::1] src = memoryview(data).cast("B")
    cdef Py_ssize_t n = src.shape[0]
    out = bytearray(2 * n + 3)
    cdef unsigned char[::1] dst = out
    cdef Py_ssize_t i = 0, j = 0, run
    while i < n:
        if src[i] != 0:
            dst[j] = src[i]
            j += 1
            i += 1
            continue
        run = 0
        while i < n and src[i] == 0 and run < 65535:
            run += 1
            i += 1
        dst[j] = 0
        dst[j + 1] = run & 0xFF
        dst[j + 2] = run >> 8
        j += 3
    return bytes(out[:j])


def rle_decompress(data):
    cdef const unsigned char[::1] src = memoryview(data).cast("B")
    cdef Py_ssize_t n = src.shape[0]
    cdef Py_ssize_t i = 0, total = 0, run
    while i < n:
        if src[i] != 0:
            total += 1
            i += 1
            continue
        if i + 2 >= n:
            raise ValueError(f"truncated run token at offset {i}")
        run = src[i + 1] | (src[i + 2] << 8)
        if run == 0:
            raise ValueError(f"zero-length run at offset {i}")
        total += run
        i += 3
    out = bytearray(total)
    cdef unsigned char[::1] dst = out
    cdef Py_ssize_t j = 0
    i = 0
    while i < n:
        if src[i] != 0:
            dst[j] = src[i]
            j += 1
            i += 1
        else:
            j += src[i + 1] | (src[i + 2] << 8)
            i += 3
    return bytes(out)
