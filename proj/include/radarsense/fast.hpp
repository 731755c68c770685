#pragma once

// Extended Fourier Amplitude Sensitivity Test (eFAST).
//
// One block of Ns runs per parameter. In block i parameter i oscillates at the
// high frequency w_i = (Ns - 1) / (2M), every other parameter at a low
// complementary frequency <= w_i / (2M). First-order indices are read from the
// harmonics p*w_i (p = 1..M), total-order indices from everything that is not
// explained by the low frequencies (harmonics 1..w_i/2).

#include "radarsense/csv.hpp"
#include "radarsense/error.hpp"
#include "radarsense/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace radarsense {

struct ParameterSpec {
    std::string name;
    double min = 0.0;
    double max = 1.0;
};

/// Triangle-wave search curve mapping s to [0, 1]:
/// x = 1/2 + arcsin(sin(omega * s + phi)) / pi.
inline double search_curve(double s, double omega, double phi) {
    return std::clamp(0.5 + std::asin(std::sin(omega * s + phi)) / std::numbers::pi, 0.0, 1.0);
}

/// Curve coordinate of sample `index` in a block of `ns` equispaced points in (-pi, pi).
inline double curve_coordinate(std::size_t index, std::size_t ns) {
    return std::numbers::pi * (2.0 * static_cast<double>(index) + 1.0 - static_cast<double>(ns)) /
           static_cast<double>(ns);
}

/// Frequency layout of one block.
struct FrequencySet {
    std::size_t high = 0;                 ///< w_i of the block's target parameter
    std::vector<std::size_t> per_param;   ///< frequency assigned to each parameter in this block
};

/// Frequencies for target parameter `target`: w_i = floor((ns-1)/(2M)); the
/// others are spread evenly over 1..max(1, floor(w_i/(2M))), repeating values
/// once there are more parameters than distinct frequencies.
inline FrequencySet efast_frequencies(std::size_t n_params, std::size_t target, std::size_t ns_per_param,
                                      std::size_t interference) {
    FrequencySet f;
    f.high = (ns_per_param - 1) / (2 * interference);
    const std::size_t low_max = std::max<std::size_t>(1, f.high / (2 * interference));
    f.per_param.resize(n_params);
    const std::size_t others = n_params - 1;
    std::size_t next = 0;
    for (std::size_t j = 0; j < n_params; ++j) {
        if (j == target) {
            f.per_param[j] = f.high;
            continue;
        }
        // floor of an even spacing from 1 to low_max inclusive
        const double t = others > 1 ? static_cast<double>(next) / static_cast<double>(others - 1) : 0.0;
        f.per_param[j] = 1 + static_cast<std::size_t>(std::floor(t * static_cast<double>(low_max - 1) + 1e-9));
        ++next;
    }
    return f;
}

struct SampleRunMeta {
    std::size_t block = 0;     ///< index of the target parameter
    std::size_t s_index = 0;
    double s = 0.0;
};

struct SampleMatrix {
    std::vector<ParameterSpec> specs;
    std::size_t ns_per_param = 0;
    std::size_t interference = 0;
    /// Row-major runs x parameters, in parameter units.
    std::vector<std::vector<double>> values;
    std::vector<SampleRunMeta> runs;
    /// Frequencies per block, phase shifts per (block, parameter).
    std::vector<FrequencySet> frequencies;
    std::vector<std::vector<double>> phases;

    std::size_t rows() const { return values.size(); }
};

inline void validate_specs(std::span<const ParameterSpec> specs) {
    if (specs.empty()) throw ValidationError("efast: no parameters");
    std::set<std::string> names;
    for (const auto& s : specs) {
        if (!(s.min < s.max)) throw ValidationError("efast: parameter '" + s.name + "' needs min < max");
        if (!names.insert(s.name).second) throw ValidationError("efast: duplicate parameter '" + s.name + "'");
    }
}

inline void validate_efast_sizes(std::size_t ns_per_param, std::size_t interference) {
    if (interference < 2) throw ValidationError("efast: interference factor M must be >= 2");
    const std::size_t bound = 4 * interference * interference + 1;
    if (ns_per_param < bound) {
        throw ValidationError("efast: ns_per_param must be >= 4*M^2+1 = " + std::to_string(bound));
    }
    if (ns_per_param % 2 == 0) throw ValidationError("efast: ns_per_param must be odd");
}

/// Builds the eFAST design: one block of ns_per_param rows per parameter.
inline SampleMatrix efast_samples(std::span<const ParameterSpec> specs, std::size_t ns_per_param,
                                  std::size_t interference, std::uint64_t seed) {
    validate_specs(specs);
    validate_efast_sizes(ns_per_param, interference);

    SampleMatrix m;
    m.specs.assign(specs.begin(), specs.end());
    m.ns_per_param = ns_per_param;
    m.interference = interference;
    const std::size_t n = specs.size();
    for (std::size_t block = 0; block < n; ++block) {
        m.frequencies.push_back(efast_frequencies(n, block, ns_per_param, interference));
        CounterRng rng(seed, static_cast<std::uint32_t>(block), 0u, 0xFFFFFFFEu);
        std::vector<double> phase(n);
        for (auto& p : phase) p = 2.0 * std::numbers::pi * rng.uniform();
        m.phases.push_back(phase);

        for (std::size_t k = 0; k < ns_per_param; ++k) {
            const double s = curve_coordinate(k, ns_per_param);
            std::vector<double> row(n);
            for (std::size_t j = 0; j < n; ++j) {
                const double unit = search_curve(s, static_cast<double>(m.frequencies[block].per_param[j]), phase[j]);
                row[j] = std::clamp(specs[j].min + unit * (specs[j].max - specs[j].min), specs[j].min, specs[j].max);
            }
            m.values.push_back(std::move(row));
            m.runs.push_back({block, k, s});
        }
    }
    return m;
}

struct ParameterIndices {
    double s_first = 0.0;
    double s_total = 0.0;
    double interaction = 0.0;
    /// Raw estimate outside [-0.05, 1.05] or first-order exceeding total-order by > 0.05.
    bool flagged = false;
    /// Output variance of this parameter's block (from the Fourier spectrum).
    double block_variance = 0.0;
};

struct SensitivityResult {
    std::vector<std::string> names;
    std::vector<ParameterIndices> indices;
    /// Mean of the per-block output variances.
    double total_variance = 0.0;
};

/// Fourier coefficients A_j, B_j of one block for j = 1..(ns-1)/2.
inline void block_spectrum(std::span<const double> y, std::span<const double> s, std::vector<double>& power) {
    const std::size_t ns = y.size();
    const std::size_t jmax = (ns - 1) / 2;
    power.assign(jmax + 1, 0.0);
    for (std::size_t j = 1; j <= jmax; ++j) {
        double a = 0.0, b = 0.0;
        for (std::size_t k = 0; k < ns; ++k) {
            a += y[k] * std::cos(static_cast<double>(j) * s[k]);
            b += y[k] * std::sin(static_cast<double>(j) * s[k]);
        }
        a /= static_cast<double>(ns);
        b /= static_cast<double>(ns);
        power[j] = a * a + b * b;
    }
}

/// First- and total-order indices from outputs gathered in SampleMatrix row order.
inline SensitivityResult analyze(const SampleMatrix& matrix, std::span<const double> outputs) {
    if (outputs.size() != matrix.rows()) throw ValidationError("analyze: output count does not match sample rows");
    for (double y : outputs) {
        if (!std::isfinite(y)) throw ValidationError("analyze: non-finite output");
    }
    const std::size_t ns = matrix.ns_per_param;
    const std::size_t m = matrix.interference;
    const std::size_t n = matrix.specs.size();

    SensitivityResult result;
    std::vector<double> power, s(ns);
    for (std::size_t k = 0; k < ns; ++k) s[k] = curve_coordinate(k, ns);

    for (std::size_t i = 0; i < n; ++i) {
        const auto y = outputs.subspan(i * ns, ns);
        double mean = 0.0, spread = 0.0;
        for (double v : y) mean += v;
        mean /= static_cast<double>(ns);
        for (double v : y) spread = std::max(spread, std::abs(v - mean));
        if (spread <= 1e-12 * std::max(1.0, std::abs(mean))) {
            throw DegenerateVarianceError("analyze: constant output in block of parameter '" + matrix.specs[i].name +
                                          "'");
        }

        block_spectrum(y, s, power);
        const std::size_t high = matrix.frequencies[i].high;
        double total = 0.0;
        for (std::size_t j = 1; j < power.size(); ++j) total += power[j];
        total *= 2.0;
        double first = 0.0;
        for (std::size_t p = 1; p <= m && p * high < power.size(); ++p) first += power[p * high];
        first *= 2.0;
        double complementary = 0.0;
        for (std::size_t j = 1; j <= high / 2 && j < power.size(); ++j) complementary += power[j];
        complementary *= 2.0;

        ParameterIndices idx;
        idx.s_first = first / total;
        idx.s_total = 1.0 - complementary / total;
        idx.interaction = idx.s_total - idx.s_first;
        idx.block_variance = total;
        const auto outside = [](double v) { return v < -0.05 || v > 1.05; };
        idx.flagged = outside(idx.s_first) || outside(idx.s_total) || idx.s_first > idx.s_total + 0.05;
        result.names.push_back(matrix.specs[i].name);
        result.indices.push_back(idx);
        result.total_variance += total / static_cast<double>(n);
    }
    return result;
}

/// Sample matrix CSV: parameter columns followed by block,s_index.
inline void write_samples(std::ostream& out, const SampleMatrix& m) {
    for (const auto& spec : m.specs) out << spec.name << ',';
    out << "block,s_index\n";
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (double v : m.values[r]) out << csv::fmt(v) << ',';
        out << m.runs[r].block << ',' << m.runs[r].s_index << '\n';
    }
}

inline void save_samples(const std::string& path, const SampleMatrix& m) {
    std::ofstream out(path);
    if (!out) throw ValidationError(path + ": cannot open for writing");
    write_samples(out, m);
}

/// Rebuilds the analysis layout of a sample matrix CSV. Bounds become the
/// observed per-column range; phases are not stored and stay empty.
inline SampleMatrix samples_from_table(const csv::Table& table, const std::string& source, std::size_t interference) {
    const std::size_t cb = table.column("block", source);
    const std::size_t cs = table.column("s_index", source);
    SampleMatrix m;
    m.interference = interference;
    std::vector<std::size_t> param_cols;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (c == cb || c == cs) continue;
        param_cols.push_back(c);
        m.specs.push_back({table.header[c], 0.0, 0.0});
    }
    const std::size_t n = param_cols.size();
    if (n == 0 || table.rows.empty() || table.rows.size() % n != 0) {
        throw ParseError(source + ": row count is not a multiple of the parameter count");
    }
    m.ns_per_param = table.rows.size() / n;
    validate_efast_sizes(m.ns_per_param, interference);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const auto block = static_cast<std::size_t>(row[cb]);
        const auto s_index = static_cast<std::size_t>(row[cs]);
        if (block != r / m.ns_per_param || s_index != r % m.ns_per_param) {
            throw ParseError(source + ": row " + std::to_string(r + 1) + ": block/s_index out of order");
        }
        std::vector<double> values;
        for (auto c : param_cols) values.push_back(row[c]);
        for (std::size_t j = 0; j < n; ++j) {
            if (r == 0 || values[j] < m.specs[j].min) m.specs[j].min = values[j];
            if (r == 0 || values[j] > m.specs[j].max) m.specs[j].max = values[j];
        }
        m.values.push_back(std::move(values));
        m.runs.push_back({block, s_index, curve_coordinate(s_index, m.ns_per_param)});
    }
    for (std::size_t i = 0; i < n; ++i) m.frequencies.push_back(efast_frequencies(n, i, m.ns_per_param, interference));
    return m;
}

inline SampleMatrix load_samples(const std::string& path, std::size_t interference) {
    return samples_from_table(csv::read_file(path), path, interference);
}

} // namespace radarsense
