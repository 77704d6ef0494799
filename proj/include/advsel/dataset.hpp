#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "advsel/linalg.hpp"

namespace advsel {

/// Admissible values of one feature: a continuous interval, the Boolean
/// pair {0,1}, or an ordered finite grid of reals.
class FeatureDomain {
public:
    struct Continuous {
        double lo;
        double hi;
    };
    struct Boolean {};
    struct Quantized {
        std::vector<double> levels;  // strictly increasing, >= 2 entries
    };

    static FeatureDomain continuous(double lo, double hi);
    static FeatureDomain boolean();
    static FeatureDomain quantized(std::vector<double> levels);

    bool is_continuous() const { return std::holds_alternative<Continuous>(v_); }
    bool is_boolean() const { return std::holds_alternative<Boolean>(v_); }
    bool is_quantized() const { return std::holds_alternative<Quantized>(v_); }
    /// Boolean and quantized domains both live on a finite grid.
    bool is_discrete() const { return !is_continuous(); }

    double lo() const;
    double hi() const;
    /// Grid levels; Boolean reports {0, 1}. Must not be called on continuous domains.
    std::vector<double> levels() const;

    bool contains(double v, double tol = 1e-9) const;
    void validate() const;

private:
    std::variant<Continuous, Boolean, Quantized> v_;
};

/// Selection vector over d features.
struct FeatureMask {
    std::vector<char> bits;

    std::size_t size() const { return bits.size(); }
    std::size_t cardinality() const;
    bool get(std::size_t i) const { return bits[i] != 0; }
    void set(std::size_t i, bool v) { bits[i] = v ? 1 : 0; }
    std::vector<std::size_t> selected_indices() const;

    static FeatureMask all_on(std::size_t d);
    static FeatureMask from_indices(std::size_t d, const std::vector<std::size_t>& idx);

    bool operator==(const FeatureMask&) const = default;
};

/// Stratified fold assignment for cross-validation.
struct FoldPlan {
    int k = 0;
    std::vector<int> assignments;  // fold index per sample
    std::uint64_t seed = 0;

    std::vector<std::size_t> fold_indices(int fold) const;
    std::vector<std::size_t> complement_indices(int fold) const;
};

/// Labeled feature matrix with per-feature domains. Labels are -1
/// (legitimate) and +1 (malicious); immutable after construction.
struct Dataset {
    Matrix features;
    std::vector<int> labels;
    std::vector<FeatureDomain> domains;
    std::vector<std::string> feature_names;  // optional; empty or length d

    std::size_t size() const { return features.rows; }
    std::size_t dim() const { return features.cols; }

    std::vector<std::size_t> indices_of_label(int label) const;
    /// Rows with the given label as a plain matrix.
    Matrix rows_with_label(int label) const;
    Dataset subset(const std::vector<std::size_t>& indices) const;
    bool has_both_classes() const;

    void validate() const;
};

enum class FileFormat { dense_csv, sparse_indexed };

/// Parse a dataset file. With `domains` empty the per-feature domains are
/// inferred: Boolean when all observed values are 0/1, otherwise the
/// observed [min, max] interval. Malformed input reports the line number.
Dataset load_dataset(const std::string& path, FileFormat format,
                     const std::optional<std::vector<FeatureDomain>>& domains = std::nullopt);
void save_dataset(const Dataset& ds, const std::string& path, FileFormat format);

std::vector<FeatureDomain> load_domains(const std::string& path);
void save_domains(const std::vector<FeatureDomain>& domains, const std::string& path);

/// Clamp every value to `cap` and divide by it. Features whose raw values
/// are all non-negative integers become quantized counts {0, 1/cap, ..., 1}.
Dataset cap_and_normalize(const Dataset& ds, double cap);

/// Keep only the selected feature columns, preserving order.
Dataset apply_mask(const Dataset& ds, const FeatureMask& mask);

/// Deterministic stratified k-fold plan; identical (labels, k, seed) give
/// identical assignments.
FoldPlan stratified_folds(const Dataset& ds, int k, std::uint64_t seed);

/// Two isotropic unit-variance Gaussians at -/+ (separation/2) on every
/// coordinate; legitimate class first. Deterministic in the seed.
Dataset synth_two_gaussians(int n_per_class, int d, double separation, std::uint64_t seed);

}  // namespace advsel
