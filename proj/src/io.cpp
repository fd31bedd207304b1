#include "abcnet/io.hpp"

#include "abcnet/evaluate.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <sstream>

namespace abcnet {

static_assert(std::endian::native == std::endian::little, "sample files are little-endian");

namespace {

constexpr char kSampleMagic[8] = {'A', 'B', 'C', 'N', 'S', 'M', 'P', '1'};

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string_view rest(line);
    for (;;) {
        const auto comma = rest.find(',');
        fields.push_back(trim(rest.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
    }
    return fields;
}

std::string where(const std::string& path, std::size_t row, std::size_t col) {
    std::ostringstream s;
    s << path << ": row " << row << ", column " << col;
    return s.str();
}

double parse_number(const std::string& cell, const std::string& path, std::size_t row, std::size_t col) {
    if (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan")
        throw ParseError(where(path, row, col) + ": missing value");
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    if (*begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw ParseError(where(path, row, col) + ": '" + cell + "' is not a number");
    if (!std::isfinite(value)) throw ParseError(where(path, row, col) + ": '" + cell + "' is not finite");
    return value;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;
};

Table read_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");
    Table table;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (table.header.empty()) {
            if (fields.size() < 2) throw ParseError(where(path, row, 1) + ": header needs at least one column");
            table.header = std::move(fields);
            continue;
        }
        if (fields.size() != table.header.size()) {
            std::ostringstream msg;
            msg << path << ": row " << row << " has " << fields.size() << " fields, expected " << table.header.size();
            throw ParseError(msg.str());
        }
        if (fields[0].empty()) throw ParseError(where(path, row, 1) + ": missing row name");
        std::vector<double> values;
        values.reserve(fields.size() - 1);
        for (std::size_t c = 1; c < fields.size(); ++c) values.push_back(parse_number(fields[c], path, row, c + 1));
        table.names.push_back(fields[0]);
        table.rows.push_back(std::move(values));
    }
    if (table.header.empty()) throw ParseError(path + ": empty file");
    if (table.rows.empty()) throw ParseError(path + ": no data rows");
    return table;
}

Matrix to_matrix(const Table& t) {
    Matrix m(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.header.size() - 1));
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        for (std::size_t j = 0; j < t.rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t.rows[i][j];
    return m;
}

template <typename T>
void put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

std::string label_or_index(const std::vector<std::string>& labels, int i) {
    if (static_cast<std::size_t>(i) < labels.size()) return labels[static_cast<std::size_t>(i)];
    return "g" + std::to_string(i + 1);
}

std::string normalise_key(std::string key) {
    std::replace(key.begin(), key.end(), '-', '_');
    return key;
}

void apply_config_key(RunConfig& cfg, const std::string& raw_key, const nlohmann::json& v) {
    const std::string key = normalise_key(raw_key);
    if (key == "prior_lo") cfg.prior_lo = v.get<double>();
    else if (key == "prior_hi") cfg.prior_hi = v.get<double>();
    else if (key == "max_fan_in" || key == "fan_in") cfg.max_fan_in = v.get<int>();
    else if (key == "sigma_theta") cfg.sigma_theta = v.get<double>();
    else if (key == "distance") cfg.distance = parse_distance_kind(v.get<std::string>());
    else if (key == "mvt_ridge") cfg.mvt_ridge = v.get<double>();
    else if (key == "epsilon_quantile") cfg.epsilon_quantile = v.get<double>();
    else if (key == "n_calibration_networks" || key == "calibration_networks") cfg.n_calibration_networks = v.get<int>();
    else if (key == "n_chains" || key == "chains") cfg.n_chains = v.get<int>();
    else if (key == "chain_length") cfg.chain_length = v.get<long>();
    else if (key == "thin") cfg.thin = v.get<int>();
    else if (key == "burnin_levels") cfg.burnin_levels = v.get<int>();
    else if (key == "burnin_iters_per_level") cfg.burnin_iters_per_level = v.get<int>();
    else if (key == "min_burnin_acceptance") cfg.min_burnin_acceptance = v.get<double>();
    else if (key == "max_burnin_repeats") cfg.max_burnin_repeats = v.get<int>();
    else if (key == "retain_fraction") cfg.retain_fraction = v.get<double>();
    else if (key == "rhat_cutoff") cfg.rhat_cutoff = v.get<double>();
    else if (key == "dimension_correction") cfg.dimension_correction = v.get<bool>();
    else if (key == "epsilon") {
        if (v.is_string() && (v.get<std::string>() == "inf" || v.get<std::string>() == "infinity"))
            cfg.epsilon = std::numeric_limits<double>::infinity();
        else
            cfg.epsilon = v.get<double>();
    }
    else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
    else throw ParseError("unknown configuration key '" + raw_key + "'");
}

}  // namespace

ExpressionData load_expression(const std::vector<std::string>& paths) {
    if (paths.empty()) throw ParseError("no expression files given");
    std::vector<Matrix> replicates;
    std::vector<std::string> genes;
    for (const auto& path : paths) {
        const Table t = read_table(path);
        if (t.header.size() < 3) throw ParseError(path + ": need at least two time points");
        if (genes.empty()) {
            genes = t.names;
        } else if (t.names != genes) {
            throw ParseError(path + ": gene rows differ from " + paths.front());
        }
        Matrix m = to_matrix(t);
        if (!replicates.empty() && m.cols() != replicates.front().cols()) {
            std::ostringstream msg;
            msg << path << ": " << m.cols() << " time points, expected " << replicates.front().cols();
            throw ParseError(msg.str());
        }
        replicates.push_back(std::move(m));
    }
    return ExpressionData(std::move(replicates), std::move(genes));
}

ExpressionData load_expression(const std::string& path) { return load_expression(std::vector<std::string>{path}); }

void write_replicate_csv(std::ostream& out, const ExpressionData& data, int replicate) {
    const Matrix& y = data.replicate(replicate);
    out << "gene";
    for (int t = 0; t < data.t_len(); ++t) out << ",t" << t + 1;
    out << '\n' << std::setprecision(17);
    for (int i = 0; i < data.p(); ++i) {
        out << data.label(i);
        for (int t = 0; t < data.t_len(); ++t) out << ',' << y(i, t);
        out << '\n';
    }
}

std::vector<std::string> save_expression(const ExpressionData& data, const std::string& path) {
    std::vector<std::string> written;
    const std::filesystem::path base(path);
    for (int r = 0; r < data.replicate_count(); ++r) {
        std::filesystem::path target = base;
        if (data.replicate_count() > 1)
            target = base.parent_path() /
                     (base.stem().string() + "_rep" + std::to_string(r + 1) + base.extension().string());
        std::ofstream out(target);
        if (!out) throw Error(target.string() + ": cannot open for writing");
        write_replicate_csv(out, data, r);
        written.push_back(target.string());
    }
    return written;
}

Matrix load_matrix_csv(const std::string& path) {
    const Table t = read_table(path);
    Matrix m = to_matrix(t);
    if (m.rows() != m.cols()) throw ParseError(path + ": matrix is not square");
    return m;
}

void write_matrix_csv(std::ostream& out, const Matrix& m, const std::vector<std::string>& labels) {
    out << "target";
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << label_or_index(labels, static_cast<int>(j));
    out << '\n' << std::setprecision(17);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out << label_or_index(labels, static_cast<int>(i));
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << m(i, j);
        out << '\n';
    }
}

SampleWriter::SampleWriter(const std::string& path, int p) : out_(path, std::ios::binary | std::ios::trunc), p_(p) {
    if (!out_) throw Error(path + ": cannot open for writing");
    out_.write(kSampleMagic, sizeof kSampleMagic);
    put(out_, static_cast<std::uint32_t>(p));
    buffer_.resize(static_cast<std::size_t>(p) * static_cast<std::size_t>(p));
}

void SampleWriter::write(const ChainSample& sample) {
    if (sample.network.p() != p_) throw DimensionError("sample gene count differs from the file header");
    put(out_, static_cast<std::int32_t>(sample.chain_id));
    put(out_, static_cast<std::int64_t>(sample.iteration));
    put(out_, sample.rho);
    const Matrix& theta = sample.network.params();
    std::size_t k = 0;
    for (int i = 0; i < p_; ++i)
        for (int j = 0; j < p_; ++j) buffer_[k++] = theta(i, j);
    out_.write(reinterpret_cast<const char*>(buffer_.data()),
               static_cast<std::streamsize>(buffer_.size() * sizeof(double)));
    if (!out_) throw Error("sample write failed");
    ++written_;
}

void SampleWriter::close() {
    out_.flush();
    out_.close();
}

SampleFile load_samples(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path + ": cannot open file");
    char magic[sizeof kSampleMagic];
    std::uint32_t p = 0;
    in.read(magic, sizeof magic);
    in.read(reinterpret_cast<char*>(&p), sizeof p);
    if (!in || std::memcmp(magic, kSampleMagic, sizeof magic) != 0) throw ParseError(path + ": not a sample file");
    if (p < 1 || p > 4096) throw ParseError(path + ": implausible gene count in header");

    SampleFile file;
    file.p = static_cast<int>(p);
    const std::size_t record = sample_record_bytes(file.p);
    std::vector<char> buf(record);
    for (long index = 0;; ++index) {
        in.read(buf.data(), static_cast<std::streamsize>(record));
        const auto got = static_cast<std::size_t>(in.gcount());
        if (got == 0) break;
        if (got != record) {
            std::ostringstream msg;
            msg << path << ": record " << index << " is truncated (" << got << " of " << record << " bytes)";
            throw ParseError(msg.str());
        }
        std::int32_t chain = 0;
        std::int64_t iteration = 0;
        double rho = 0.0;
        std::memcpy(&chain, buf.data(), 4);
        std::memcpy(&iteration, buf.data() + 4, 8);
        std::memcpy(&rho, buf.data() + 12, 8);
        Matrix theta(file.p, file.p);
        const char* cursor = buf.data() + 20;
        for (int i = 0; i < file.p; ++i)
            for (int j = 0; j < file.p; ++j, cursor += 8) std::memcpy(&theta(i, j), cursor, 8);
        file.samples.push_back(ChainSample{GeneNetwork::from_params(std::move(theta)), rho, iteration, chain});
    }
    return file;
}

void save_samples(const std::string& path, int p, const std::vector<ChainSample>& samples) {
    SampleWriter writer(path, p);
    for (const auto& s : samples) writer.write(s);
    writer.close();
}

void write_summary_csv(std::ostream& out, const PosteriorSummary& summary, const std::vector<std::string>& labels) {
    static constexpr int kReported[] = {50, 80, 90, 95, 99};
    out << "target,regulator,samples,presence,mean";
    for (int a : kReported) out << ",ci" << a << "_lo,ci" << a << "_hi";
    out << ",rigidity,label,never_present\n" << std::setprecision(10);
    for (const auto& e : summary.edges) {
        out << label_or_index(labels, e.target) << ',' << label_or_index(labels, e.regulator) << ',' << e.samples << ','
            << e.presence() << ',' << e.mean;
        for (int a : kReported)
            out << ',' << e.ci_lo[static_cast<std::size_t>(a - 1)] << ',' << e.ci_hi[static_cast<std::size_t>(a - 1)];
        out << ',' << e.rigidity << ',' << to_string(e.label) << ',' << (e.never_present() ? 1 : 0) << '\n';
    }
}

void write_histogram_csv(std::ostream& out, const PosteriorSummary& summary, const std::vector<std::string>& labels) {
    const double width = (summary.prior_hi - summary.prior_lo) / kHistogramBins;
    out << "target,regulator" << std::setprecision(10);
    for (int b = 0; b < kHistogramBins; ++b) out << ",bin" << b << '@' << summary.prior_lo + (b + 0.5) * width;
    out << '\n';
    for (const auto& e : summary.edges) {
        out << label_or_index(labels, e.target) << ',' << label_or_index(labels, e.regulator);
        for (double h : e.histogram) out << ',' << h;
        out << '\n';
    }
}

void write_rhat_csv(std::ostream& out, const std::vector<double>& rhat, int p, const std::vector<std::string>& labels,
                    double cutoff) {
    out << "target,regulator,rhat,converged\n" << std::setprecision(10);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) {
            const double r = rhat.at(static_cast<std::size_t>(i) * static_cast<std::size_t>(p) + static_cast<std::size_t>(j));
            out << label_or_index(labels, i) << ',' << label_or_index(labels, j) << ',' << r << ','
                << (r < cutoff ? 1 : 0) << '\n';
        }
}

StudySpec parse_study_spec(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("study spec: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("study spec must be a JSON object");
    StudySpec spec;
    try {
        for (const auto& [key, value] : doc.items()) {
            if (key == "timepoints") spec.t_len = value.get<int>();
            else if (key == "seeds") spec.seeds = value.get<std::vector<std::uint64_t>>();
            else if (key == "generators") {
                spec.generators.clear();
                for (const auto& g : value) spec.generators.push_back(parse_generator_kind(g.get<std::string>()));
            } else if (key == "noise_sd") spec.noise_sd = value.get<std::vector<double>>();
            else if (key == "distances") {
                spec.distances.clear();
                for (const auto& d : value) spec.distances.push_back(parse_distance_kind(d.get<std::string>()));
            } else if (key == "epsilon_quantiles") spec.epsilon_quantiles = value.get<std::vector<double>>();
            else if (key == "prior_bounds") spec.prior_bounds = value.get<std::vector<std::pair<double, double>>>();
            else if (key == "bonferroni") spec.eval.bonferroni = value.get<bool>();
            else if (key == "include_diagonal") spec.eval.include_diagonal = value.get<bool>();
            else if (key == "threads") spec.threads = value.get<int>();
            else if (key == "summary_dir") spec.summary_dir = value.get<std::string>();
            else if (key == "tune_sigma") spec.tune_sigma = value.get<std::vector<double>>();
            else if (key == "tune_length") spec.tune_length = value.get<long>();
            else if (key == "config") {
                for (const auto& [ck, cv] : value.items()) apply_config_key(spec.base, ck, cv);
            } else throw ParseError("study spec: unknown key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("study spec: ") + e.what());
    }
    if (spec.seeds.empty() || spec.generators.empty() || spec.noise_sd.empty() || spec.distances.empty() ||
        spec.epsilon_quantiles.empty() || spec.prior_bounds.empty())
        throw ParseError("study spec: every grid axis needs at least one value");
    for (double s : spec.tune_sigma)
        if (!(s > 0.0)) throw ParseError("study spec: tune_sigma values must be positive");
    if (spec.tune_length < 1) throw ParseError("study spec: tune_length must be positive");
    spec.base.validate();
    return spec;
}

StudySpec load_study_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");
    std::stringstream text;
    text << in.rdbuf();
    return parse_study_spec(text.str());
}

void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    for (int number = 1; std::getline(in, line); ++number) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string trimmed = trim(line);
        if (trimmed.empty() || trimmed.front() == '[') continue;
        const auto eq = trimmed.find('=');
        if (eq == std::string::npos)
            throw ParseError(origin + ":" + std::to_string(number) + ": expected key = value");
        const std::string key = trim(std::string_view(trimmed).substr(0, eq));
        const std::string raw = trim(std::string_view(trimmed).substr(eq + 1));
        nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
        if (value.is_discarded()) value = raw;
        try {
            apply_config_key(cfg, key, value);
        } catch (const nlohmann::json::exception&) {
            throw ParseError(origin + ":" + std::to_string(number) + ": bad value '" + raw + "' for " + key);
        } catch (const ParseError& e) {
            throw ParseError(origin + ":" + std::to_string(number) + ": " + e.what());
        } catch (const Error& e) {
            throw ParseError(origin + ":" + std::to_string(number) + ": " + e.what());
        }
    }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");
    std::stringstream text;
    text << in.rdbuf();
    apply_config_text(cfg, text.str(), path);
}

std::string describe_config(const RunConfig& cfg) {
    std::ostringstream s;
    s << std::setprecision(17);
    s << "prior-lo=" << cfg.prior_lo << '\n'
      << "prior-hi=" << cfg.prior_hi << '\n'
      << "fan-in=" << cfg.max_fan_in << '\n'
      << "sigma-theta=" << cfg.sigma_theta << '\n'
      << "distance=" << to_string(cfg.distance) << '\n'
      << "mvt-ridge=" << cfg.mvt_ridge << '\n'
      << "epsilon-quantile=" << cfg.epsilon_quantile << '\n'
      << "calibration-networks=" << cfg.n_calibration_networks << '\n'
      << "chains=" << cfg.n_chains << '\n'
      << "chain-length=" << cfg.chain_length << '\n'
      << "thin=" << cfg.thin << '\n'
      << "burnin-levels=" << cfg.burnin_levels << '\n'
      << "burnin-iters-per-level=" << cfg.burnin_iters_per_level << '\n'
      << "min-burnin-acceptance=" << cfg.min_burnin_acceptance << '\n'
      << "max-burnin-repeats=" << cfg.max_burnin_repeats << '\n'
      << "retain-fraction=" << cfg.retain_fraction << '\n'
      << "rhat-cutoff=" << cfg.rhat_cutoff << '\n'
      << "dimension-correction=" << (cfg.dimension_correction ? "true" : "false") << '\n';
    if (cfg.epsilon) s << "epsilon=" << *cfg.epsilon << '\n';
    s << "seed=" << cfg.seed << '\n';
    return s.str();
}

}  // namespace abcnet
