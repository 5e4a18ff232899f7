#pragma once

#include <spca/datamat.hpp>
#include <spca/errors.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace spca {

struct ClassCounts {
    long tp = 0;
    long tn = 0;
    long fp = 0;
    long fn = 0;

    long total() const noexcept { return tp + tn + fp + fn; }
    friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

// One-vs-rest binary decisions over every (sample, class) pair.
struct ClassificationReport {
    std::vector<ClassCounts> per_class;
    double q_accuracy = 0.0;
    double plain_accuracy = 0.0;
    long n = 0;
    int classes = 0;
};

inline std::vector<ClassCounts> confusion_counts(const LabelVector& pred, const LabelVector& truth,
                                                 int classes) {
    if (pred.size() != truth.size()) {
        throw InvalidInput("confusion_counts: " + std::to_string(pred.size()) +
                           " predictions vs " + std::to_string(truth.size()) + " labels");
    }
    if (classes < 1) throw InvalidInput("confusion_counts: class count must be >= 1");
    auto check = [classes](int l) {
        if (l < 0 || l >= classes) {
            throw InvalidInput("confusion_counts: label " + std::to_string(l) + " out of range");
        }
    };
    std::vector<ClassCounts> counts(static_cast<std::size_t>(classes));
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const int p = pred[i];
        const int t = truth[i];
        check(p);
        check(t);
        for (int c = 0; c < classes; ++c) {
            auto& k = counts[static_cast<std::size_t>(c)];
            if (p == c && t == c) ++k.tp;
            else if (t == c) ++k.fn;
            else if (p == c) ++k.fp;
            else ++k.tn;
        }
    }
    return counts;
}

inline double q_accuracy(const ClassificationReport& report) {
    if (report.n == 0 || report.classes == 0) throw InvalidInput("q_accuracy: empty report");
    long hits = 0;
    long total = 0;
    for (const auto& c : report.per_class) {
        hits += c.tp + c.tn;
        total += c.total();
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

inline double plain_accuracy(const LabelVector& pred, const LabelVector& truth) {
    if (pred.size() != truth.size()) throw InvalidInput("plain_accuracy: length mismatch");
    if (pred.size() == 0) throw InvalidInput("plain_accuracy: empty label vectors");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i];
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

inline ClassificationReport evaluate(const LabelVector& pred, const LabelVector& truth, int classes) {
    ClassificationReport r;
    r.per_class = confusion_counts(pred, truth, classes);
    r.n = static_cast<long>(truth.size());
    r.classes = classes;
    r.q_accuracy = q_accuracy(r);
    r.plain_accuracy = plain_accuracy(pred, truth);
    return r;
}

template <class T>
struct Timed {
    T value;
    double wall_seconds;
};

template <>
struct Timed<void> {
    double wall_seconds;
};

// Runs op under a steady clock.
template <class Op>
auto timed(Op&& op) -> Timed<std::invoke_result_t<Op>> {
    using clock = std::chrono::steady_clock;
    using R = std::invoke_result_t<Op>;
    const auto start = clock::now();
    if constexpr (std::is_void_v<R>) {
        std::forward<Op>(op)();
        return {std::chrono::duration<double>(clock::now() - start).count()};
    } else {
        R value = std::forward<Op>(op)();
        const double s = std::chrono::duration<double>(clock::now() - start).count();
        return {std::move(value), s};
    }
}

// Round half up at two decimals; the small nudge absorbs representation error.
inline std::string format_fixed2(double value) {
    const double cents = std::floor(value * 100.0 + 0.5 + 1e-9);
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.2f", cents / 100.0);
    return buf;
}

// Fraction in [0, 1] as a percent with two decimals: 647/675 -> "95.85".
inline std::string format_percent(double fraction) { return format_fixed2(fraction * 100.0); }

} // namespace spca
