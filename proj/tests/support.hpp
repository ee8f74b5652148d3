#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace testing_support {

namespace fs = std::filesystem;

inline fs::path test_data(const std::string& rel) { return fs::path(MLBIAS_TEST_DATA) / rel; }
inline fs::path repo_data(const std::string& rel) { return fs::path(MLBIAS_REPO_DATA) / rel; }

/// Directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<unsigned> counter{0};
        const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
        path_ = fs::temp_directory_path() /
                ("mlbias-test-" + std::to_string(stamp) + "-" + std::to_string(counter.fetch_add(1)));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    fs::path path_;
};

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
}

inline std::vector<std::string> read_lines(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

/// Small deterministic generator for fixture data (xorshift64*, Box-Muller).
class FixtureRng {
public:
    explicit FixtureRng(std::uint64_t seed) : state_(seed ? seed : 1) {}
    std::uint64_t next() {
        state_ ^= state_ >> 12;
        state_ ^= state_ << 25;
        state_ ^= state_ >> 27;
        return state_ * 0x2545F4914F6CDD1DULL;
    }
    double uniform() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }
    double normal() { return std::sqrt(-2.0 * std::log(uniform())) * std::cos(6.283185307179586 * uniform()); }

private:
    std::uint64_t state_;
};

/// Three well-separated Gaussian blobs of `per_blob` points in `dim`
/// dimensions; returns the points and their blob index.
inline std::pair<std::vector<std::vector<double>>, std::vector<int>> three_blobs(std::size_t per_blob = 10,
                                                                               std::size_t dim = 10,
                                                                               std::uint64_t seed = 2024) {
    FixtureRng rng(seed);
    std::vector<std::vector<double>> pts;
    std::vector<int> label;
    for (int b = 0; b < 3; ++b)
        for (std::size_t i = 0; i < per_blob; ++i) {
            std::vector<double> v(dim);
            for (std::size_t k = 0; k < dim; ++k) v[k] = (k == static_cast<std::size_t>(b) ? 10.0 : 0.0) + rng.normal();
            pts.push_back(std::move(v));
            label.push_back(b);
        }
    return {pts, label};
}

} // namespace testing_support
