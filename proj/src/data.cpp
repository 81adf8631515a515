#include "blp/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>

#include "blp/io.hpp"
#include "blp/scorer.hpp"

namespace blp::data {

namespace {

// ===== delimited-text parsing =====

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
}

std::vector<std::string> split_fields(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
            cur.push_back(c);
        } else if (c == delim && !quoted) {
            out.push_back(unquote(trim(cur)));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(unquote(trim(cur)));
    return out;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) lines.push_back(cur);
    return lines;
}

enum class ColKind { continuous, categorical };

struct TabularSchema {
    std::vector<std::pair<std::string, ColKind>> columns;  // feature columns, schema order
    std::string label_column;
    char delim = ',';
    // maps a label cell to 0/1; throws on anything else
    int (*label_fn)(const std::string& cell) = nullptr;
};

[[noreturn]] void row_error(const std::string& path, std::size_t line_no, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

TabularData load_tabular(const std::string& path, const TabularSchema& schema) {
    const std::string text = io::read_file_auto(path);
    const std::vector<std::string> lines = split_lines(text);
    if (lines.empty()) throw std::runtime_error(path + ": empty file (header row required)");

    const std::vector<std::string> header = split_fields(lines[0], schema.delim);
    std::vector<int> col_pos;  // position of each schema feature column in the file
    for (const auto& [name, kind] : schema.columns) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw std::runtime_error(path + ": header is missing required column '" + name + "'");
        col_pos.push_back(static_cast<int>(it - header.begin()));
    }
    const auto lit = std::find(header.begin(), header.end(), schema.label_column);
    if (lit == header.end())
        throw std::runtime_error(path + ": header is missing label column '" +
                                 schema.label_column + "'");
    const int label_pos = static_cast<int>(lit - header.begin());

    // pass 1: collect surviving rows as cells
    struct Row {
        std::vector<std::string> cells;  // one per schema feature column
        int label;
    };
    std::vector<Row> rows;
    std::size_t skipped = 0;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (trim(lines[ln]).empty()) continue;
        const std::vector<std::string> fields = split_fields(lines[ln], schema.delim);
        if (fields.size() != header.size())
            row_error(path, ln + 1, "expected " + std::to_string(header.size()) +
                                        " fields, found " + std::to_string(fields.size()));
        bool missing = false;
        for (const std::string& f : fields)
            if (f == "?") missing = true;
        if (missing) {
            ++skipped;
            continue;
        }
        Row row;
        row.cells.reserve(col_pos.size());
        for (int pos : col_pos) row.cells.push_back(fields[pos]);
        try {
            row.label = schema.label_fn(fields[label_pos]);
        } catch (const std::exception& e) {
            row_error(path, ln + 1, e.what());
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error(path + ": no usable data rows");

    // pass 2: column statistics and category tables
    const std::size_t ncol = schema.columns.size();
    std::vector<std::vector<double>> cont_values(ncol);
    std::vector<std::vector<std::string>> cats(ncol);
    for (std::size_t c = 0; c < ncol; ++c) {
        if (schema.columns[c].second == ColKind::continuous) {
            cont_values[c].reserve(rows.size());
            for (std::size_t r = 0; r < rows.size(); ++r) {
                const std::string& cell = rows[r].cells[c];
                try {
                    std::size_t used = 0;
                    const double v = std::stod(cell, &used);
                    if (used != cell.size()) throw std::invalid_argument("trailing characters");
                    cont_values[c].push_back(v);
                } catch (const std::exception&) {
                    throw std::runtime_error(path + ": non-numeric value '" + cell +
                                             "' in continuous column '" +
                                             schema.columns[c].first + "'");
                }
            }
        } else {
            std::vector<std::string> uniq;
            for (const Row& row : rows) uniq.push_back(row.cells[c]);
            std::sort(uniq.begin(), uniq.end());
            uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
            cats[c] = std::move(uniq);
        }
    }

    TabularData out;
    out.meta.skipped_rows = skipped;
    std::vector<double> means(ncol, 0.0), sds(ncol, 0.0);
    for (std::size_t c = 0; c < ncol; ++c) {
        if (schema.columns[c].second != ColKind::continuous) continue;
        const auto& vals = cont_values[c];
        double m = 0.0;
        for (double v : vals) m += v;
        m /= static_cast<double>(vals.size());
        double s = 0.0;
        for (double v : vals) s += (v - m) * (v - m);
        s = std::sqrt(s / static_cast<double>(vals.size()));
        means[c] = m;
        sds[c] = s;
        out.meta.cont_mean.push_back(m);
        out.meta.cont_sd.push_back(s);
    }
    // Encoded vector interleaves columns in schema order, each categorical
    // expanding into its sorted one-hot slots.
    std::size_t dim = 0;
    for (std::size_t c = 0; c < ncol; ++c) {
        if (schema.columns[c].second == ColKind::continuous) {
            out.meta.feature_names.push_back(schema.columns[c].first);
            ++dim;
        } else {
            for (const std::string& cat : cats[c])
                out.meta.feature_names.push_back(schema.columns[c].first + "=" + cat);
            dim += cats[c].size();
            out.meta.categories.push_back(cats[c]);
        }
    }

    out.dataset.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        LabeledPoint pt;
        pt.label = rows[r].label;
        pt.x.reserve(dim);
        for (std::size_t c = 0; c < ncol; ++c) {
            if (schema.columns[c].second == ColKind::continuous) {
                const double v = cont_values[c][r];
                pt.x.push_back(sds[c] > 1e-12 ? (v - means[c]) / sds[c] : 0.0);
            } else {
                const auto& table = cats[c];
                const auto it =
                    std::lower_bound(table.begin(), table.end(), rows[r].cells[c]);
                const std::size_t k = static_cast<std::size_t>(it - table.begin());
                for (std::size_t j = 0; j < table.size(); ++j)
                    pt.x.push_back(j == k ? 1.0 : 0.0);
            }
        }
        out.dataset.push_back(std::move(pt));
    }
    return out;
}

int adult_label(const std::string& cell) {
    std::string v = cell;
    if (!v.empty() && v.back() == '.') v.pop_back();
    if (v == ">50K") return 1;
    if (v == "<=50K") return 0;
    throw std::invalid_argument("unrecognized income label '" + cell + "'");
}

int bank_label(const std::string& cell) {
    if (cell == "yes") return 1;
    if (cell == "no") return 0;
    throw std::invalid_argument("unrecognized y label '" + cell + "'");
}

}  // namespace

TabularData load_adult(const std::string& path) {
    TabularSchema s;
    s.columns = {
        {"age", ColKind::continuous},
        {"workclass", ColKind::categorical},
        {"fnlwgt", ColKind::continuous},
        {"education", ColKind::categorical},
        {"education-num", ColKind::continuous},
        {"marital-status", ColKind::categorical},
        {"occupation", ColKind::categorical},
        {"relationship", ColKind::categorical},
        {"race", ColKind::categorical},
        {"sex", ColKind::categorical},
        {"capital-gain", ColKind::continuous},
        {"capital-loss", ColKind::continuous},
        {"hours-per-week", ColKind::continuous},
        {"native-country", ColKind::categorical},
    };
    s.label_column = "income";
    s.delim = ',';
    s.label_fn = adult_label;
    return load_tabular(path, s);
}

TabularData load_bank(const std::string& path) {
    TabularSchema s;
    s.columns = {
        {"age", ColKind::continuous},      {"job", ColKind::categorical},
        {"marital", ColKind::categorical}, {"education", ColKind::categorical},
        {"default", ColKind::categorical}, {"balance", ColKind::continuous},
        {"housing", ColKind::categorical}, {"loan", ColKind::categorical},
        {"contact", ColKind::categorical}, {"day", ColKind::continuous},
        {"month", ColKind::categorical},   {"duration", ColKind::continuous},
        {"campaign", ColKind::continuous}, {"pdays", ColKind::continuous},
        {"previous", ColKind::continuous}, {"poutcome", ColKind::categorical},
    };
    s.label_column = "y";
    s.delim = ';';
    s.label_fn = bank_label;
    return load_tabular(path, s);
}

namespace {

std::uint32_t read_be32(const std::string& bytes, std::size_t offset, const std::string& path) {
    if (offset + 4 > bytes.size()) throw std::runtime_error(path + ": truncated IDX header");
    const auto b = [&](std::size_t i) {
        return static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + i]));
    };
    return (b(0) << 24) | (b(1) << 16) | (b(2) << 8) | b(3);
}

}  // namespace

LabeledDataset load_mnist5(const std::string& images_path, const std::string& labels_path) {
    const std::string img = io::read_file_auto(images_path);
    const std::string lab = io::read_file_auto(labels_path);
    if (read_be32(img, 0, images_path) != 0x00000803u)
        throw std::runtime_error(images_path + ": bad IDX image magic");
    if (read_be32(lab, 0, labels_path) != 0x00000801u)
        throw std::runtime_error(labels_path + ": bad IDX label magic");
    const std::uint32_t n = read_be32(img, 4, images_path);
    const std::uint32_t rows = read_be32(img, 8, images_path);
    const std::uint32_t cols = read_be32(img, 12, images_path);
    const std::uint32_t n_lab = read_be32(lab, 4, labels_path);
    if (n != n_lab)
        throw std::runtime_error("IDX image/label counts differ: " + std::to_string(n) + " vs " +
                                 std::to_string(n_lab));
    const std::size_t pix = static_cast<std::size_t>(rows) * cols;
    if (img.size() != 16 + static_cast<std::size_t>(n) * pix)
        throw std::runtime_error(images_path + ": truncated IDX image payload");
    if (lab.size() != 8 + static_cast<std::size_t>(n))
        throw std::runtime_error(labels_path + ": truncated IDX label payload");

    LabeledDataset out;
    out.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        LabeledPoint pt;
        pt.x.resize(pix);
        const std::size_t base = 16 + static_cast<std::size_t>(i) * pix;
        for (std::size_t p = 0; p < pix; ++p)
            pt.x[p] = static_cast<unsigned char>(img[base + p]) / 255.0;
        const int digit = static_cast<unsigned char>(lab[8 + i]);
        pt.label = digit == 5 ? 1 : 0;
        out.push_back(std::move(pt));
    }
    return out;
}

LabeledPoint xor_draw(const XorConfig& cfg, Rng& rng) {
    std::uniform_int_distribution<int> pick(0, 3);
    const int c = pick(rng);
    std::normal_distribution<double> noise(0.0, std::sqrt(cfg.variance));
    LabeledPoint pt;
    pt.x = {cfg.centers[c][0] + noise(rng), cfg.centers[c][1] + noise(rng)};
    pt.label = cfg.labels[c];
    return pt;
}

LogisticStreamSpec make_logistic_spec(int d, double tau, double lipschitz, std::uint64_t seed,
                                      double support_radius) {
    if (d < 1) throw std::invalid_argument("logistic spec: d must be >= 1");
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("logistic spec: tau in (0,1)");
    if (!(lipschitz > 0.0)) throw std::invalid_argument("logistic spec: lipschitz must be > 0");
    if (!(support_radius > 0.0))
        throw std::invalid_argument("logistic spec: support radius must be > 0");
    LogisticStreamSpec spec;
    spec.tau = tau;
    spec.support_radius = support_radius;
    Rng rng(derive_seed(seed, 7));
    std::normal_distribution<double> gauss(0.0, 1.0);
    double norm = 0.0;
    while (norm < 1e-12) {
        spec.theta_star.resize(d);
        for (double& v : spec.theta_star) v = gauss(rng);
        norm = 0.0;
        for (double v : spec.theta_star) norm += v * v;
        norm = std::sqrt(norm);
    }
    for (double& v : spec.theta_star) v *= lipschitz / norm;
    return spec;
}

double fstar(const LogisticStreamSpec& spec, const FeatureVector& x) {
    if (x.size() != spec.theta_star.size())
        throw std::invalid_argument("fstar: dimension mismatch");
    double f = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) f += spec.theta_star[j] * x[j];
    return f;
}

FeatureVector logistic_draw_x(const LogisticStreamSpec& spec, Rng& rng) {
    const int d = static_cast<int>(spec.theta_star.size());
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    constexpr long kMaxDraws = 1000000;
    for (long attempt = 0; attempt < kMaxDraws; ++attempt) {
        // uniform on the ball: gaussian direction, radius ~ u^(1/d)
        FeatureVector x(d);
        double norm = 0.0;
        for (double& v : x) {
            v = gauss(rng);
            norm += v * v;
        }
        norm = std::sqrt(norm);
        if (norm < 1e-12) continue;
        const double r =
            spec.support_radius * std::pow(unif(rng), 1.0 / static_cast<double>(d));
        for (double& v : x) v *= r / norm;
        if (std::abs(fstar(spec, x)) >= spec.tau) return x;
    }
    throw std::runtime_error(
        "logistic stream: could not draw a margin-separated point within 1e6 attempts "
        "(is tau achievable on this support?)");
}

int logistic_draw_label(const LogisticStreamSpec& spec, const FeatureVector& x, Rng& rng) {
    std::bernoulli_distribution draw(scorer::link(fstar(spec, x)));
    return draw(rng) ? 1 : 0;
}

}  // namespace blp::data
