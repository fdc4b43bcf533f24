#include "riesz/fft.hpp"

#include <cmath>
#include <stdexcept>

#include "riesz/parallel.hpp"

namespace riesz {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

void fft(std::vector<cplx>& a, bool inverse) {
    const size_t n = a.size();
    if (!is_pow2(static_cast<int>(n))) throw std::invalid_argument("fft: power-of-two size required");
    // bit-reversal permutation
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        double ang = 2.0 * M_PI / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        cplx wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            cplx w(1.0);
            for (size_t j = 0; j < len / 2; ++j) {
                cplx u = a[i + j];
                cplx v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse) {
        double inv = 1.0 / static_cast<double>(n);
        for (cplx& z : a) z *= inv;
    }
}

void fft2(std::vector<cplx>& a, int nx, int ny, bool inverse) {
    if (static_cast<size_t>(nx) * ny != a.size())
        throw std::invalid_argument("fft2: size mismatch");
    // rows
    parallel_for(0, ny, [&](long y) {
        std::vector<cplx> row(a.begin() + y * nx, a.begin() + (y + 1) * nx);
        fft(row, inverse);
        std::copy(row.begin(), row.end(), a.begin() + y * nx);
    });
    // columns
    parallel_for(0, nx, [&](long x) {
        std::vector<cplx> col(ny);
        for (int y = 0; y < ny; ++y) col[y] = a[static_cast<size_t>(y) * nx + x];
        fft(col, inverse);
        for (int y = 0; y < ny; ++y) a[static_cast<size_t>(y) * nx + x] = col[y];
    });
}

} // namespace riesz
