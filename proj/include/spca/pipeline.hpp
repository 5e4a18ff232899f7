#pragma once

#include <spca/classify.hpp>
#include <spca/datamat.hpp>
#include <spca/errors.hpp>
#include <spca/metrics.hpp>
#include <spca/prox.hpp>
#include <spca/sparse_pca.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <future>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace spca {

enum class ReduceMethod { none, pca, ista_spca, fista_spca };
enum class ClassifierKind { nn, krr };
enum class TableFormat { csv, text };

inline const char* to_string(ReduceMethod m) {
    switch (m) {
    case ReduceMethod::none: return "none";
    case ReduceMethod::pca: return "pca";
    case ReduceMethod::ista_spca: return "ista-spca";
    case ReduceMethod::fista_spca: return "fista-spca";
    }
    return "?";
}

inline bool is_sparse(ReduceMethod m) {
    return m == ReduceMethod::ista_spca || m == ReduceMethod::fista_spca;
}

struct SyntheticSpec {
    int classes = 3;
    int per_class = 8;
    int test_per_class = 4;
    int dims = 1024;
    double separation = 50.0;
};

struct RunConfig {
    std::string train_path;
    std::string train_labels_path;
    std::string test_path;
    std::string test_labels_path;
    std::optional<SyntheticSpec> synthetic;  // replaces the four paths when set

    ReduceMethod method = ReduceMethod::none;
    int d = 0;
    std::optional<double> lambda;  // required for sparse methods
    std::optional<double> step;    // nullopt = auto
    double tol = 1e-6;
    int max_iter = 1000;

    ClassifierKind classifier = ClassifierKind::nn;
    int k = 1;
    KernelSpec kernel;
    double gamma = 0.1;

    std::uint64_t seed = 0;
    bool scale = false;
    bool record_timing = true;

    void validate() const {
        if (!synthetic && (train_path.empty() || train_labels_path.empty() || test_path.empty() ||
                           test_labels_path.empty())) {
            throw InvalidInput("train, train-labels, test and test-labels paths are all required");
        }
        if (method != ReduceMethod::none && d < 1) throw InvalidInput("d must be >= 1");
        if (is_sparse(method)) {
            if (!lambda) throw InvalidInput("--lambda is required for sparse methods");
            if (!(*lambda >= 0.0) || !std::isfinite(*lambda)) {
                throw InvalidInput("lambda must be finite and >= 0");
            }
            solver_config().validate();
        }
        if (classifier == ClassifierKind::nn && k < 1) throw InvalidInput("k must be >= 1");
        if (classifier == ClassifierKind::krr) {
            kernel.validate();
            if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidInput("gamma must be > 0");
        }
    }

    SolverConfig solver_config() const {
        SolverConfig c;
        c.step = step;
        c.tol = tol;
        c.max_iter = max_iter;
        c.seed = seed;
        c.normalize = true;
        return c;
    }
};

struct BenchmarkRow {
    std::string method;
    int d = 0;
    std::optional<double> lambda;
    double q_accuracy = 0.0;      // percent
    double plain_accuracy = 0.0;  // percent
    double fit_seconds = 0.0;
    int iterations = 0;
    bool converged = true;
    bool timing_recorded = true;
    bool parallel = false;
    std::optional<std::string> error;
};

// Failure inside run_pipeline; exit_code follows the CLI convention
// (2 config, 3 data, 4 numeric).
class PipelineError : public Error {
public:
    PipelineError(std::string stage, int exit_code, const std::string& what)
        : Error(stage + ": " + what), stage_(std::move(stage)), exit_code_(exit_code) {}

    const std::string& stage() const noexcept { return stage_; }
    int exit_code() const noexcept { return exit_code_; }

private:
    std::string stage_;
    int exit_code_;
};

namespace detail {

// Runs fn, rethrowing library errors as PipelineError tagged with the stage.
// `invalid_code` is the exit code for InvalidInput at this stage.
template <class Fn>
auto stage(const char* name, int invalid_code, Fn&& fn) {
    try {
        return std::forward<Fn>(fn)();
    } catch (const PipelineError&) {
        throw;
    } catch (const ParseError& e) {
        throw PipelineError(name, 3, e.what());
    } catch (const IoError& e) {
        throw PipelineError(name, 3, e.what());
    } catch (const NumericError& e) {
        throw PipelineError(name, 4, e.what());
    } catch (const InvalidInput& e) {
        throw PipelineError(name, invalid_code, e.what());
    }
}

} // namespace detail

inline DatasetSplit load_data(const RunConfig& config) {
    return detail::stage("load", 3, [&] {
        if (config.synthetic) {
            const auto& s = *config.synthetic;
            return generate_synthetic_split(s.classes, s.per_class, s.test_per_class, s.dims,
                                            s.separation, config.seed);
        }
        return load_csv_split(config.train_path, config.train_labels_path, config.test_path,
                              config.test_labels_path);
    });
}

/**
 * center -> optional scale -> reduce (timed) -> transform -> classify -> score,
 * on already loaded data. Only reducer fitting is inside the timed region.
 */
inline BenchmarkRow run_cell(const RunConfig& config, const DatasetSplit& data) {
    detail::stage("config", 2, [&] { config.validate(); });

    BenchmarkRow row;
    row.method = to_string(config.method);
    row.d = config.method == ReduceMethod::none ? 0 : config.d;
    if (is_sparse(config.method)) row.lambda = config.lambda;
    row.timing_recorded = config.record_timing;

    auto [train, test] = detail::stage("center", 3, [&] {
        if (!config.scale) return center(data.train, data.test);
        const double f = unit_scale_factor(data.train);
        return center(scaled(data.train, f), scaled(data.test, f));
    });

    DataMatrix train_features = train.data;
    DataMatrix test_features = test.data;
    if (config.method != ReduceMethod::none) {
        auto fitted = detail::stage("reduce", 2, [&] {
            return timed([&] {
                if (config.method == ReduceMethod::pca) {
                    SpcaReport r;
                    r.loadings = fit_pca(train, config.d);
                    return r;
                }
                const auto m = config.method == ReduceMethod::ista_spca ? Method::ista : Method::fista;
                return fit_sparse_pca(train, config.d, *config.lambda, m, config.solver_config());
            });
        });
        row.fit_seconds = config.record_timing ? fitted.wall_seconds : 0.0;
        row.iterations = fitted.value.total_iterations();
        row.converged = fitted.value.all_converged();
        std::tie(train_features, test_features) = detail::stage("transform", 2, [&] {
            return std::pair{transform(train, fitted.value.loadings),
                             transform(test, fitted.value.loadings)};
        });
    }

    const LabelVector pred = detail::stage("classify", 2, [&] {
        if (config.classifier == ClassifierKind::nn) {
            return nn_classify(train_features, data.train_labels, test_features, config.k);
        }
        const auto model = krr_fit(train_features, data.train_labels, config.kernel, config.gamma);
        return krr_predict(model, test_features);
    });

    const auto report = detail::stage("score", 3, [&] {
        const int classes = std::max(data.train_labels.classes, data.test_labels.classes);
        return evaluate(pred, data.test_labels, classes);
    });
    row.q_accuracy = 100.0 * report.q_accuracy;
    row.plain_accuracy = 100.0 * report.plain_accuracy;
    return row;
}

inline BenchmarkRow run_pipeline(const RunConfig& config) {
    detail::stage("config", 2, [&] { config.validate(); });
    return run_cell(config, load_data(config));
}

/**
 * Methods outer, d inner; a `none` method contributes a single baseline row.
 * Every cell uses the base seed. A failing cell becomes an error row. With
 * `parallel`, cells run on worker threads and their rows are flagged.
 */
inline std::vector<BenchmarkRow> run_grid(const RunConfig& base, const std::vector<int>& d_list,
                                          const std::vector<ReduceMethod>& methods,
                                          bool parallel = false) {
    if (d_list.empty()) throw PipelineError("config", 2, "d list is empty");
    if (methods.empty()) throw PipelineError("config", 2, "method list is empty");
    const DatasetSplit data = load_data(base);

    std::vector<RunConfig> cells;
    for (auto m : methods) {
        if (m == ReduceMethod::none) {
            RunConfig c = base;
            c.method = m;
            cells.push_back(std::move(c));
            continue;
        }
        for (int d : d_list) {
            RunConfig c = base;
            c.method = m;
            c.d = d;
            cells.push_back(std::move(c));
        }
    }

    auto run_one = [&data](const RunConfig& c) {
        try {
            return run_cell(c, data);
        } catch (const Error& e) {
            BenchmarkRow row;
            row.method = to_string(c.method);
            row.d = c.method == ReduceMethod::none ? 0 : c.d;
            if (is_sparse(c.method)) row.lambda = c.lambda;
            row.converged = false;
            row.error = e.what();
            return row;
        }
    };

    std::vector<BenchmarkRow> rows(cells.size());
    if (!parallel) {
        for (std::size_t i = 0; i < cells.size(); ++i) rows[i] = run_one(cells[i]);
        return rows;
    }
    const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    for (std::size_t begin = 0; begin < cells.size(); begin += workers) {
        const std::size_t end = std::min(cells.size(), begin + workers);
        std::vector<std::future<BenchmarkRow>> batch;
        for (std::size_t i = begin; i < end; ++i) {
            batch.push_back(std::async(std::launch::async, run_one, std::cref(cells[i])));
        }
        for (std::size_t i = begin; i < end; ++i) {
            rows[i] = batch[i - begin].get();
            rows[i].parallel = true;
        }
    }
    return rows;
}

inline constexpr const char* csv_header =
    "method,d,lambda,q_accuracy,plain_accuracy,fit_seconds,iterations,converged";

namespace detail {

inline std::string format_lambda(const std::optional<double>& lambda) {
    if (!lambda) return "-";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", *lambda);
    return buf;
}

inline std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

// Cells of one row, in csv_header order.
inline std::vector<std::string> row_cells(const BenchmarkRow& r) {
    std::vector<std::string> cells{r.method, r.d ? std::to_string(r.d) : "-",
                                   format_lambda(r.lambda)};
    if (r.error) {
        cells.insert(cells.end(), {"", "", "", "", "error: " + *r.error});
        return cells;
    }
    std::string seconds = r.timing_recorded ? format_fixed2(r.fit_seconds) : "-";
    if (r.parallel && r.timing_recorded) seconds += '*';
    cells.push_back(format_fixed2(r.q_accuracy));
    cells.push_back(format_fixed2(r.plain_accuracy));
    cells.push_back(std::move(seconds));
    cells.push_back(std::to_string(r.iterations));
    cells.push_back(r.converged ? "true" : "false");
    return cells;
}

} // namespace detail

inline std::string render_table(const std::vector<BenchmarkRow>& rows, TableFormat format) {
    if (rows.empty()) throw InvalidInput("emit_table: no rows");
    std::vector<std::vector<std::string>> table;
    table.push_back({"method", "d", "lambda", "q_accuracy", "plain_accuracy", "fit_seconds",
                     "iterations", "converged"});
    for (const auto& r : rows) table.push_back(detail::row_cells(r));

    std::ostringstream out;
    if (format == TableFormat::csv) {
        for (const auto& line : table) {
            for (std::size_t c = 0; c < line.size(); ++c) {
                if (c) out << ',';
                const bool quote = line[c].find_first_of(",\"\n") != std::string::npos;
                out << (quote ? detail::csv_quote(line[c]) : line[c]);
            }
            out << '\n';
        }
        return out.str();
    }

    std::vector<std::size_t> width(table.front().size(), 0);
    for (const auto& line : table) {
        for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
    }
    bool any_parallel = false;
    for (const auto& r : rows) any_parallel |= r.parallel;
    for (std::size_t li = 0; li < table.size(); ++li) {
        const auto& line = table[li];
        std::string text;
        for (std::size_t c = 0; c < line.size(); ++c) {
            if (c) text += "  ";
            const std::string pad(width[c] - line[c].size(), ' ');
            // text columns left-aligned, numbers right-aligned
            text += (c == 0 || c == 7) ? line[c] + pad : pad + line[c];
        }
        while (!text.empty() && text.back() == ' ') text.pop_back();
        out << text << '\n';
        if (li == 0) {
            std::size_t total = 0;
            for (auto w : width) total += w;
            out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
        }
    }
    if (any_parallel) out << "* fit time measured while other cells ran concurrently\n";
    return out.str();
}

inline void emit_table(const std::vector<BenchmarkRow>& rows, TableFormat format,
                       const std::string& path) {
    const std::string text = render_table(rows, format);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << text;
    if (!out) throw IoError("write failed for '" + path + "'");
}

} // namespace spca
