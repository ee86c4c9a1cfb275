#pragma once
// Shared test utilities: environment paths, tiny schemas, and a
// finite-difference gradient checker.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "ncpp/encode.hpp"
#include "ncpp/schema.hpp"
#include "ncpp/tensor.hpp"

namespace testutil {

inline std::string source_dir() {
    const char* d = std::getenv("NCPP_SOURCE_DIR");
    return d ? d : ".";
}

inline std::string cli_path() {
    const char* p = std::getenv("NCPP_CLI_PATH");
    return p ? p : "";
}

// Fresh temp directory per call.
inline std::string temp_dir(const std::string& tag) {
    static int counter = 0;
    const std::string path = (std::filesystem::temp_directory_path() /
                              ("ncpp_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                               std::to_string(counter++)))
                                 .string();
    std::filesystem::create_directories(path);
    return path;
}

// Small schema so model tests stay fast: 2 memory + 3 cpu + 1 other numeric,
// 2 categorical.
inline ncpp::FeatureSchema tiny_schema() {
    ncpp::FeatureSchema s;
    using ncpp::FeatureGroup;
    using ncpp::FeatureKind;
    s.features.push_back({"mem_a", FeatureKind::Numeric, FeatureGroup::Memory, ""});
    s.features.push_back({"mem_b", FeatureKind::Numeric, FeatureGroup::Memory, ""});
    s.features.push_back({"cpu_a", FeatureKind::Numeric, FeatureGroup::Cpu, ""});
    s.features.push_back({"cpu_b", FeatureKind::Numeric, FeatureGroup::Cpu, ""});
    s.features.push_back({"cpu_c", FeatureKind::Numeric, FeatureGroup::Cpu, ""});
    s.features.push_back({"oth_a", FeatureKind::Numeric, FeatureGroup::Other, ""});
    s.features.push_back({"tag_a", FeatureKind::Categorical, FeatureGroup::Workload, ""});
    s.features.push_back({"tag_b", FeatureKind::Categorical, FeatureGroup::Other, ""});
    s.validate();
    return s;
}

inline std::vector<double> random_vec(std::mt19937_64& rng, size_t n, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

struct GradCheckResult {
    bool ok = true;
    int checked = 0;
    double worst_abs = 0.0, worst_rel = 0.0;
    std::string worst_at;
};

// build(tape) must reconstruct the forward graph from the same parameter
// tensors and return a scalar loss; build(nullptr) evaluates without taping.
inline GradCheckResult check_gradients(const std::function<ncpp::TensorPtr(ncpp::Tape*)>& build,
                                       const std::vector<ncpp::TensorPtr>& params, double h = 1e-5,
                                       double rtol = 1e-4, double atol = 1e-6,
                                       const std::vector<std::string>* names = nullptr) {
    using namespace ncpp;
    for (const auto& p : params) {
        make_grad(p);
        p->zero_grad();
    }
    Tape tape;
    auto loss = build(&tape);
    tape.backward(loss);
    std::vector<std::vector<double>> analytic;
    for (const auto& p : params) analytic.push_back(p->grad);

    GradCheckResult res;
    for (size_t k = 0; k < params.size(); ++k) {
        auto& p = params[k];
        for (int i = 0; i < p->numel(); ++i) {
            const double orig = p->data[static_cast<size_t>(i)];
            p->data[static_cast<size_t>(i)] = orig + h;
            const double lp = build(nullptr)->data[0];
            p->data[static_cast<size_t>(i)] = orig - h;
            const double lm = build(nullptr)->data[0];
            p->data[static_cast<size_t>(i)] = orig;
            const double fd = (lp - lm) / (2.0 * h);
            const double an = analytic[k][static_cast<size_t>(i)];
            const double abs_err = std::abs(fd - an);
            const double rel = abs_err / std::max(std::max(std::abs(fd), std::abs(an)), 1e-12);
            ++res.checked;
            if (abs_err > res.worst_abs) {
                res.worst_abs = abs_err;
                res.worst_rel = rel;
                res.worst_at = (names ? (*names)[k] : "param" + std::to_string(k)) + "[" +
                               std::to_string(i) + "]";
            }
            if (!(abs_err <= atol || rel <= rtol)) res.ok = false;
        }
    }
    return res;
}

} // namespace testutil
