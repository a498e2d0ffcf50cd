#include "ktnz/data.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>

#include "ktnz/errors.hpp"

namespace ktnz {

Dataset load_cifar10(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) fail(ErrorCode::TruncatedFile, "cannot open " + path);
    std::vector<char> bytes((std::istreambuf_iterator<char>(file)),
                            std::istreambuf_iterator<char>());

    constexpr std::size_t kRecord = 3073;
    if (bytes.size() % kRecord != 0) {
        fail(ErrorCode::BadRecordSize,
             "file length " + std::to_string(bytes.size()) +
                 " is not a multiple of 3073");
    }

    Dataset out;
    out.reserve(bytes.size() / kRecord);
    for (std::size_t rec = 0; rec < bytes.size(); rec += kRecord) {
        const int label = static_cast<unsigned char>(bytes[rec]);
        if (label > 9) {
            fail(ErrorCode::BadLabel, "label " + std::to_string(label) +
                                          " > 9 in record " +
                                          std::to_string(rec / kRecord));
        }
        DenseTensor img({3, 32, 32});
        for (std::size_t i = 0; i < 3072; ++i) {
            img.mutable_data()[i] =
                static_cast<unsigned char>(bytes[rec + 1 + i]) / 255.0;
        }
        out.push_back(Sample{Image(std::move(img)), label});
    }
    return out;
}

namespace {

constexpr std::size_t kSide = 16;

// Stdlib-distribution-free uniform and Gaussian draws, so the dataset is
// bitwise stable across standard libraries.
double uniform01(std::mt19937_64& eng) {
    return static_cast<double>((eng() >> 11) + 1) * 0x1p-53; // (0, 1]
}

double gaussian(std::mt19937_64& eng) {
    const double u1 = uniform01(eng);
    const double u2 = uniform01(eng);
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
}

void render_glyph(double* px, std::size_t cls) {
    const std::size_t shape = cls % 8;
    const double value = cls < 8 ? 1.0 : 0.5;
    auto set = [&](std::size_t r, std::size_t c) { px[r * kSide + c] = value; };
    for (std::size_t r = 0; r < kSide; ++r) {
        for (std::size_t c = 0; c < kSide; ++c) {
            switch (shape) {
            case 0: // vertical bar
                if (c >= 6 && c <= 9) set(r, c);
                break;
            case 1: // horizontal bar
                if (r >= 6 && r <= 9) set(r, c);
                break;
            case 2: // main diagonal band
                if (r <= c + 1 && c <= r + 1) set(r, c);
                break;
            case 3: // anti-diagonal band
                if (r + c >= kSide - 2 && r + c <= kSide) set(r, c);
                break;
            case 4: // top-left block
                if (r < 8 && c < 8) set(r, c);
                break;
            case 5: // bottom-right block
                if (r >= 8 && c >= 8) set(r, c);
                break;
            case 6: // cross
                if ((r >= 7 && r <= 8) || (c >= 7 && c <= 8)) set(r, c);
                break;
            case 7: // border ring
                if (r < 2 || c < 2 || r >= kSide - 2 || c >= kSide - 2) set(r, c);
                break;
            }
        }
    }
}

} // namespace

Dataset synth_dataset(std::size_t n, std::size_t classes, std::uint64_t seed,
                      double sigma) {
    if (classes < 2) fail(ErrorCode::BadConfig, "synth dataset needs >= 2 classes");

    std::mt19937_64 eng(seed);
    Dataset out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t cls = i % classes;
        DenseTensor img({1, kSide, kSide});
        render_glyph(img.mutable_data().data(), cls);
        if (sigma != 0.0) {
            for (double& v : img.mutable_data()) v += sigma * gaussian(eng);
        }
        out.push_back(Sample{Image(std::move(img)), static_cast<int>(cls)});
    }
    return out;
}

} // namespace ktnz
