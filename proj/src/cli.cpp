#include "afgm/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include "afgm/errors.hpp"
#include "afgm/rng.hpp"

namespace afgm::cli {

namespace fs = std::filesystem;

namespace {

// Canonical keys with defaults, in the order resolved.cfg lists them.
const std::vector<std::pair<std::string, std::string>>& defaults() {
    static const std::vector<std::pair<std::string, std::string>> d{
        {"data", ""},
        {"split", "auto"},
        {"T", "96"},
        {"H", "96"},
        {"D", "0"},
        {"hidden_dim", "16"},
        {"freq_dim", "0"},
        {"F_n", "1"},
        {"patch_lengths", "48,24"},
        {"conv_kernel", "3"},
        {"adapter_hidden", "0"},
        {"encoder", "interactive"},
        {"core", "afgssm"},
        {"spectral", "amp_only"},
        {"omega_mode", "dynamic"},
        {"lr", "1e-4"},
        {"batch_size", "24"},
        {"max_epochs", "10"},
        {"patience", "5"},
        {"seed", "1"},
        {"grad_clip", "1"},
        {"threads", "1"},
    };
    return d;
}

const std::map<std::string, std::string, std::less<>>& aliases() {
    static const std::map<std::string, std::string, std::less<>> a{
        {"V", "hidden_dim"}, {"S", "freq_dim"}, {"batch", "batch_size"}, {"epochs", "max_epochs"}};
    return a;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::size_t to_size(const std::string& key, const std::string& v) {
    std::size_t out = 0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (v.empty() || ec != std::errc() || ptr != end) {
        throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    errno = 0;
    const double out = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(out)) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
    }
    return out;
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(v);
    while (std::getline(is, item, ',')) {
        out.push_back(trim(item));
    }
    return out;
}

std::vector<std::size_t> to_sizes(const std::string& key, const std::string& v) {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(v)) {
        out.push_back(to_size(key, item));
    }
    if (out.empty()) {
        throw ConfigError("config key '" + key + "': empty list");
    }
    return out;
}

std::string join(const std::vector<std::size_t>& xs) {
    std::string out;
    for (std::size_t x : xs) {
        out += (out.empty() ? "" : ",") + std::to_string(x);
    }
    return out;
}

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw IoError("cannot write " + path.string());
    }
    return os;
}

void finish(std::ofstream& os, const fs::path& path) {
    os.flush();
    if (!os) {
        throw IoError("write failed: " + path.string());
    }
}

std::string utc_stamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
    return buf;
}

}  // namespace

RunConfig::RunConfig() {
    for (const auto& [k, v] : defaults()) {
        values_[k] = v;
    }
}

RunConfig RunConfig::parse(std::string_view text, const std::string& source) {
    RunConfig cfg;
    std::size_t line_no = 0;
    std::istringstream is{std::string(text)};
    std::string line;
    while (std::getline(is, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        const std::string body = trim(line);
        if (body.empty()) {
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
        }
        try {
            cfg.set(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cfg;
}

RunConfig RunConfig::load(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw ConfigError("cannot open config file " + path.string());
    }
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse(ss.str(), path.string());
}

void RunConfig::set(const std::string& key, const std::string& value) {
    std::string k = key;
    if (const auto a = aliases().find(k); a != aliases().end()) {
        k = a->second;
    }
    const auto it = values_.find(k);
    if (it == values_.end()) {
        throw ConfigError("unknown config key '" + key + "'");
    }
    it->second = value;
}

void RunConfig::assign(const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("expected key=value, got '" + kv + "'");
    }
    set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
}

const std::string& RunConfig::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        throw ConfigError("unknown config key '" + key + "'");
    }
    return it->second;
}

const std::vector<std::string>& RunConfig::keys() {
    static const std::vector<std::string> k = [] {
        std::vector<std::string> out;
        for (const auto& [key, v] : defaults()) {
            out.push_back(key);
        }
        return out;
    }();
    return k;
}

std::string RunConfig::render() const {
    std::string out;
    for (const auto& k : keys()) {
        out += k + " = " + values_.at(k) + "\n";
    }
    return out;
}

ModelConfig RunConfig::model_config(std::vector<std::string>* warnings) const {
    ModelConfig c;
    c.T = to_size("T", get("T"));
    c.H = to_size("H", get("H"));
    c.D = to_size("D", get("D"));
    if (c.D == 0) {
        throw ConfigError("config key 'D' is unresolved (0); set it or supply data");
    }
    c.V = to_size("hidden_dim", get("hidden_dim"));
    c.S = to_size("freq_dim", get("freq_dim"));
    if (c.S == 0) {
        c.S = c.V;
    }
    c.F_n = to_size("F_n", get("F_n"));
    c.conv_kernel = to_size("conv_kernel", get("conv_kernel"));
    c.adapter_hidden = to_size("adapter_hidden", get("adapter_hidden"));
    c.patch_lengths.clear();
    for (std::size_t p : to_sizes("patch_lengths", get("patch_lengths"))) {
        if (p > c.T) {
            if (warnings != nullptr) {
                warnings->push_back("patch length " + std::to_string(p) + " exceeds T=" + std::to_string(c.T) +
                                    "; scale dropped");
            }
            continue;
        }
        c.patch_lengths.push_back(p);
    }
    if (c.patch_lengths.empty()) {
        throw ConfigError("config key 'patch_lengths': no patch length fits T=" + std::to_string(c.T));
    }
    c.encoder = parse_encoder(get("encoder"));
    c.core = parse_core(get("core"));
    c.spectral = parse_spectral(get("spectral"));
    c.omega_mode = parse_omega_mode(get("omega_mode"));
    c.validate();
    return c;
}

TrainConfig RunConfig::train_config() const {
    TrainConfig t;
    t.lr = to_double("lr", get("lr"));
    t.batch_size = to_size("batch_size", get("batch_size"));
    t.max_epochs = to_size("max_epochs", get("max_epochs"));
    t.patience = to_size("patience", get("patience"));
    t.seed = seed();
    t.grad_clip = to_double("grad_clip", get("grad_clip"));
    t.threads = to_size("threads", get("threads"));
    t.validate();
    return t;
}

std::uint64_t RunConfig::seed() const { return to_size("seed", get("seed")); }

SplitScheme RunConfig::split_scheme() const { return parse_split_scheme(get("split")); }

fs::path RunConfig::data_path() const {
    const std::string& p = get("data");
    if (p.empty()) {
        throw ConfigError("no dataset configured; set data=<csv path>");
    }
    return p;
}

std::vector<std::vector<std::string>> expand_grid(const std::vector<std::string>& specs) {
    std::vector<std::vector<std::string>> combos{{}};
    for (const auto& entry : specs) {
        const auto eq = entry.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("grid entry must look like key=a,b,c; got '" + entry + "'");
        }
        const std::string key = trim(entry.substr(0, eq));
        const auto values = split_list(entry.substr(eq + 1));
        if (values.empty()) {
            throw ConfigError("grid entry '" + entry + "' has no values");
        }
        std::vector<std::vector<std::string>> next;
        for (const auto& c : combos) {
            for (const auto& v : values) {
                auto extended = c;
                extended.push_back(key + "=" + v);
                next.push_back(std::move(extended));
            }
        }
        combos = std::move(next);
    }
    return combos;
}

fs::path runs_root() {
    const char* env = std::getenv("AFGM_RUNS_DIR");
    return env != nullptr && *env != '\0' ? fs::path(env) : fs::path("runs");
}

fs::path create_run_dir(const fs::path& root, const std::string& cmd, std::uint64_t seed) {
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) {
        throw IoError("cannot create runs directory " + root.string() + ": " + ec.message());
    }
    const std::string base = cmd + "-s" + std::to_string(seed) + "-" + utc_stamp();
    for (std::size_t n = 0;; ++n) {
        const fs::path dir = root / (n == 0 ? base : base + "-" + std::to_string(n));
        if (fs::create_directory(dir, ec)) {
            return dir;
        }
        if (ec) {
            throw IoError("cannot create run directory " + dir.string() + ": " + ec.message());
        }
    }
}

double bench_scan_seconds(std::size_t M, std::size_t S, std::size_t V, std::size_t repeats, std::uint64_t seed) {
    SplitMix64 rng(seed);
    const Tensor u = rng.uniform_tensor({M, V}, -1, 1);
    const Tensor omega = omega_base(V);
    auto param = [&](Shape s) { return rng.uniform_tensor(std::move(s), -0.3, 0.3); };
    const Tensor w_b = param({S, V}), c = param({S, S}), d_u = param({S}), d_y = param({S, S}),
                 w_g_amp = param({S, S}), w_g_u = param({S}), w_g_y = param({S, S}), m_time_u = param({V, V}),
                 m_time_z = param({V, V}), m_fre_u = param({S, V}), m_fre_z = param({S, V});
    auto scan_once = [&] {
        Graph g(Graph::Mode::inference);
        ScanVars p{g.constant(w_b),      g.constant(c),        g.constant(d_u),      g.constant(d_y),
                   g.constant(w_g_amp),  g.constant(w_g_u),    g.constant(w_g_y),    g.constant(m_time_u),
                   g.constant(m_time_z), g.constant(m_fre_u),  g.constant(m_fre_z),  {}};
        scan_channel(g.constant(u), g.constant(omega), p);
    };
    using clock = std::chrono::steady_clock;
    // warm-up, which also sizes the batch so one sample spans >= 20 ms
    const auto w0 = clock::now();
    scan_once();
    const double warm = std::chrono::duration<double>(clock::now() - w0).count();
    const auto batch = static_cast<std::size_t>(std::max(1.0, std::ceil(0.02 / std::max(warm, 1e-9))));
    std::vector<double> times;
    for (std::size_t r = 0; r < std::max<std::size_t>(repeats, 1); ++r) {
        const auto t0 = clock::now();
        for (std::size_t k = 0; k < batch; ++k) {
            scan_once();
        }
        times.push_back(std::chrono::duration<double>(clock::now() - t0).count() / static_cast<double>(batch));
    }
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
}

namespace {

// Config plus the dataset it refers to, with D resolved from the file.
struct Resolved {
    RunConfig cfg;
    ModelConfig model;
    PreparedData data;
};

Resolved resolve_with_data(RunConfig cfg, std::ostream& err) {
    Dataset ds = load_csv(cfg.data_path());
    cfg.set("data", fs::absolute(cfg.data_path()).lexically_normal().string());
    const std::size_t D = to_size("D", cfg.get("D"));
    if (D == 0) {
        cfg.set("D", std::to_string(ds.vars()));
    } else if (D != ds.vars()) {
        throw ConfigError("config says D=" + std::to_string(D) + " but " + cfg.get("data") + " has " +
                          std::to_string(ds.vars()) + " variables");
    }
    if (cfg.get("freq_dim") == "0") {
        cfg.set("freq_dim", cfg.get("hidden_dim"));
    }
    std::vector<std::string> warnings;
    ModelConfig mc = cfg.model_config(&warnings);
    for (const auto& w : warnings) {
        err << "warning: " << w << "\n";
    }
    cfg.set("patch_lengths", join(mc.patch_lengths));
    (void)cfg.train_config();  // validate before any run directory exists
    PreparedData data = prepare(std::move(ds), cfg.split_scheme(), mc.T, mc.H);
    return {std::move(cfg), std::move(mc), std::move(data)};
}

void write_text(const fs::path& path, const std::string& text) {
    auto os = open_out(path);
    os << text;
    finish(os, path);
}

void write_metrics(const fs::path& path, const std::vector<std::pair<std::string, Metrics>>& rows) {
    auto os = open_out(path);
    os << "split,mse,mae\n";
    for (const auto& [name, m] : rows) {
        os << name << "," << num(m.mse) << "," << num(m.mae) << "\n";
    }
    finish(os, path);
}

// Trains one configuration inside `dir` and returns the best model's test metrics.
Metrics train_into(const fs::path& dir, const Resolved& r, std::ostream& out) {
    write_text(dir / "resolved.cfg", r.cfg.render());
    const fs::path hist_path = dir / "history.csv";
    auto hist = open_out(hist_path);
    hist << "epoch,train_mse,val_mse,seconds\n";
    hist.flush();
    TrainHooks hooks;
    hooks.on_epoch = [&](const EpochRecord& e) {
        hist << e.epoch << "," << num(e.train_mse) << "," << num(e.val_mse) << "," << num(e.seconds) << "\n";
        hist.flush();
        out << "epoch " << e.epoch << "  train_mse " << num(e.train_mse) << "  val_mse " << num(e.val_mse) << "\n";
    };
    hooks.on_improve = [&](const Model& m) { save_checkpoint(m.params(), dir / "best.ckpt"); };
    const TrainResult result =
        train(Model::initialize(r.model, r.cfg.seed()), r.data, r.cfg.train_config(), hooks);
    finish(hist, hist_path);
    save_checkpoint(result.final_state, dir / "last.ckpt");

    const std::size_t threads = r.cfg.train_config().threads;
    const Metrics val = evaluate(result.best, r.data.windows(Split::val, r.model.T, r.model.H), threads);
    const Metrics test = evaluate(result.best, r.data.windows(Split::test, r.model.T, r.model.H), threads);
    write_metrics(dir / "metrics.csv", {{"val", val}, {"test", test}});
    out << "best epoch " << result.best_epoch << "  test mse " << num(test.mse) << "  mae " << num(test.mae)
        << "\n";
    return test;
}

// Shared options for commands that act on a trained checkpoint.
struct CheckpointArgs {
    std::string run_dir;
    std::string config;
    std::string checkpoint;
    std::vector<std::string> sets;
};

void add_checkpoint_options(CLI::App* cmd, CheckpointArgs& a) {
    cmd->add_option("--run", a.run_dir, "Run directory (uses its resolved.cfg and best.ckpt)");
    cmd->add_option("--config", a.config, "Config file (overrides --run's resolved.cfg)");
    cmd->add_option("--checkpoint", a.checkpoint, "Checkpoint file (overrides --run's best.ckpt)");
    cmd->add_option("--set", a.sets, "Override one key: --set key=value (repeatable)");
}

struct Loaded {
    Resolved r;
    Model model;
};

Loaded load_trained(const CheckpointArgs& a, std::ostream& err) {
    fs::path cfg_path = a.config;
    fs::path ckpt_path = a.checkpoint;
    if (!a.run_dir.empty()) {
        if (cfg_path.empty()) {
            cfg_path = fs::path(a.run_dir) / "resolved.cfg";
        }
        if (ckpt_path.empty()) {
            ckpt_path = fs::path(a.run_dir) / "best.ckpt";
        }
    }
    if (ckpt_path.empty()) {
        throw ConfigError("no checkpoint given; use --run DIR or --checkpoint FILE");
    }
    RunConfig cfg = cfg_path.empty() ? RunConfig() : RunConfig::load(cfg_path);
    for (const auto& s : a.sets) {
        cfg.assign(s);
    }
    Resolved r = resolve_with_data(std::move(cfg), err);
    Model model(r.model, load_checkpoint(ckpt_path));
    return {std::move(r), std::move(model)};
}

RunConfig base_config(const std::string& path, const std::vector<std::string>& sets) {
    RunConfig cfg = path.empty() ? RunConfig() : RunConfig::load(path);
    for (const auto& s : sets) {
        cfg.assign(s);
    }
    return cfg;
}

int cmd_train(const std::string& config, const std::vector<std::string>& sets, const std::vector<std::string>& grid,
              std::ostream& out, std::ostream& err) {
    const RunConfig base = base_config(config, sets);
    const auto combos = expand_grid(grid);
    // resolve every grid point first so a bad value fails before any training
    std::vector<Resolved> runs;
    for (const auto& combo : combos) {
        RunConfig cfg = base;
        for (const auto& kv : combo) {
            cfg.assign(kv);
        }
        runs.push_back(resolve_with_data(std::move(cfg), err));
    }
    for (const auto& r : runs) {
        const fs::path dir = create_run_dir(runs_root(), "train", r.cfg.seed());
        out << "run " << dir.string() << "\n";
        train_into(dir, r, out);
    }
    return kOk;
}

int cmd_eval(const CheckpointArgs& a, const std::string& split_name, std::ostream& out, std::ostream& err) {
    const Split which = parse_split(split_name);
    const Loaded l = load_trained(a, err);
    const fs::path dir = create_run_dir(runs_root(), "eval", l.r.cfg.seed());
    write_text(dir / "resolved.cfg", l.r.cfg.render());
    const Metrics m = evaluate(l.model, l.r.data.windows(which, l.r.model.T, l.r.model.H),
                               l.r.cfg.train_config().threads);
    write_metrics(dir / "metrics.csv", {{to_string(which), m}});
    out << "run " << dir.string() << "\n" << to_string(which) << " mse " << num(m.mse) << "  mae " << num(m.mae)
        << "\n";
    return kOk;
}

int cmd_predict(const CheckpointArgs& a, const std::string& split_name, std::size_t limit, std::ostream& out,
                std::ostream& err) {
    const Split which = parse_split(split_name);
    const Loaded l = load_trained(a, err);
    const fs::path dir = create_run_dir(runs_root(), "predict", l.r.cfg.seed());
    write_text(dir / "resolved.cfg", l.r.cfg.render());
    const WindowSet ws = l.r.data.windows(which, l.r.model.T, l.r.model.H);
    const std::size_t n = limit == 0 ? ws.size() : std::min(limit, ws.size());
    const fs::path path = dir / "predictions.csv";
    auto os = open_out(path);
    os << "window_origin,step,variable,prediction,target\n";
    const auto& names = l.r.data.dataset.names;
    for (std::size_t i = 0; i < n; ++i) {
        const SeriesWindow w = ws.at(i);
        const Tensor pred = l.model.denormalize(l.model.predict_normalized(w.input));
        const Tensor target = l.model.denormalize(w.target);
        for (std::size_t h = 0; h < pred.shape()[0]; ++h) {
            for (std::size_t d = 0; d < pred.shape()[1]; ++d) {
                os << w.origin << "," << h + 1 << "," << names[d] << "," << num(pred.at(h, d)) << ","
                   << num(target.at(h, d)) << "\n";
            }
        }
    }
    finish(os, path);
    out << "run " << dir.string() << "\n" << n << " windows written to " << path.string() << "\n";
    return kOk;
}

int cmd_gradcheck(const std::string& config, std::vector<std::string> sets, bool toy, double h, double tol,
                  std::ostream& out, std::ostream& err) {
    if (toy) {
        sets.insert(sets.begin(), {"T=24", "H=6", "D=2", "hidden_dim=4", "freq_dim=4", "F_n=1", "patch_lengths=12"});
    }
    RunConfig cfg = base_config(config, sets);
    std::vector<std::string> warnings;
    Tensor input, target;
    ModelConfig mc;
    if (!cfg.get("data").empty()) {
        const Resolved r = resolve_with_data(cfg, err);
        cfg = r.cfg;
        mc = r.model;
        const SeriesWindow w = r.data.windows(Split::train, mc.T, mc.H).at(0);
        input = w.input;
        target = w.target;
    } else {
        if (cfg.get("freq_dim") == "0") {
            cfg.set("freq_dim", cfg.get("hidden_dim"));
        }
        mc = cfg.model_config(&warnings);
        for (const auto& w : warnings) {
            err << "warning: " << w << "\n";
        }
        SplitMix64 rng(cfg.seed() + 1);
        input = rng.uniform_tensor({mc.T, mc.D}, -2, 2);
        target = rng.uniform_tensor({mc.H, mc.D}, -2, 2);
    }
    const fs::path dir = create_run_dir(runs_root(), "gradcheck", cfg.seed());
    write_text(dir / "resolved.cfg", cfg.render());

    Model model = Model::initialize(mc, cfg.seed());
    model.set_normalization(Tensor::filled({mc.D}, 0.0), Tensor::filled({mc.D}, 1.0));
    GradCheckOptions opt;
    opt.h = h;
    opt.tolerance = tol;
    const GradCheckReport report = grad_check(model, input, target, opt);

    const fs::path path = dir / "gradcheck.csv";
    auto os = open_out(path);
    os << "parameter,rel_error,max_abs_grad,status\n";
    for (const auto& e : report.entries) {
        const char* status = e.passed ? "PASS" : "FAIL";
        os << e.name << "," << num(e.rel_error) << "," << num(e.max_analytic) << "," << status << "\n";
        out << status << "  " << e.name << "  rel_err " << num(e.rel_error) << "\n";
    }
    finish(os, path);
    out << (report.passed() ? "PASS" : "FAIL") << "  gradcheck (" << report.entries.size()
        << " tensors, tol " << num(tol) << ")\n";
    return report.passed() ? kOk : kNumeric;
}

int cmd_bench(const std::vector<std::size_t>& Ms, const std::vector<std::size_t>& Ss,
              const std::vector<std::size_t>& Vs, std::size_t repeats, std::uint64_t seed, std::ostream& out) {
    const fs::path dir = create_run_dir(runs_root(), "bench", seed);
    const fs::path path = dir / "bench.csv";
    auto os = open_out(path);
    os << "M,S,V,median_seconds\n";
    out << "M,S,V,median_seconds\n";
    for (std::size_t V : Vs) {
        for (std::size_t S : Ss) {
            for (std::size_t M : Ms) {
                if (M == 0 || S == 0 || V == 0) {
                    throw ConfigError("bench sizes must be positive");
                }
                const double t = bench_scan_seconds(M, S, V, repeats, seed);
                const std::string row = std::to_string(M) + "," + std::to_string(S) + "," + std::to_string(V) +
                                        "," + num(t) + "\n";
                os << row;
                out << row;
            }
        }
    }
    finish(os, path);
    out << "run " << dir.string() << "\n";
    return kOk;
}

int cmd_ablate(const std::string& config, const std::vector<std::string>& sets, const std::string& cases,
               std::ostream& out, std::ostream& err) {
    const RunConfig base = base_config(config, sets);
    std::vector<std::pair<std::string, Resolved>> runs;
    for (const auto& name : split_list(cases)) {
        RunConfig cfg = base;
        // translate the case into explicit keys so each resolved.cfg replays on its own
        const ModelConfig variant = with_case(ModelConfig{}, name);
        cfg.set("encoder", to_string(variant.encoder));
        cfg.set("core", to_string(variant.core));
        cfg.set("spectral", to_string(variant.spectral));
        cfg.set("omega_mode", to_string(variant.omega_mode));
        runs.emplace_back(name, resolve_with_data(std::move(cfg), err));
    }
    if (runs.empty()) {
        throw ConfigError("no ablation cases given");
    }
    const fs::path dir = create_run_dir(runs_root(), "ablate", base.seed());
    out << "run " << dir.string() << "\n";
    std::vector<std::pair<std::string, Metrics>> summary;
    for (const auto& [name, r] : runs) {
        const fs::path sub = dir / ("case-" + name);
        if (!fs::create_directory(sub)) {
            throw ConfigError("duplicate ablation case '" + name + "'");
        }
        out << "case " << name << "\n";
        summary.emplace_back(name, train_into(sub, r, out));
    }
    const fs::path path = dir / "summary.csv";
    auto os = open_out(path);
    os << "case,mse,mae\n";
    for (const auto& [name, m] : summary) {
        os << name << "," << num(m.mse) << "," << num(m.mae) << "\n";
    }
    finish(os, path);
    return kOk;
}

int cmd_inspect(const CheckpointArgs& a, const std::string& split_name, std::size_t window, std::size_t channel,
                std::size_t block, std::ostream& out, std::ostream& err) {
    const Split which = parse_split(split_name);
    const Loaded l = load_trained(a, err);
    const ModelConfig& mc = l.r.model;
    if (mc.core != CoreKind::afgssm) {
        throw ConfigError("inspect-freq needs core=afgssm; the plain SSM has no frequency state");
    }
    if (channel >= mc.D || block >= mc.F_n) {
        throw ConfigError("channel/block out of range (D=" + std::to_string(mc.D) +
                          ", F_n=" + std::to_string(mc.F_n) + ")");
    }
    const WindowSet ws = l.r.data.windows(which, mc.T, mc.H);
    if (window >= ws.size()) {
        throw ConfigError("window " + std::to_string(window) + " out of range; split has " +
                          std::to_string(ws.size()));
    }
    ForwardTrace trace;
    (void)l.model.predict_normalized(ws.at(window).input, &trace);
    const ScanTrace& st = trace.blocks.at(block).at(channel);

    const fs::path dir = create_run_dir(runs_root(), "inspect-freq", l.r.cfg.seed());
    write_text(dir / "resolved.cfg", l.r.cfg.render());
    auto dump = [&](const std::string& file, const std::vector<Tensor>& steps) {
        const fs::path path = dir / file;
        auto os = open_out(path);
        os << "step,s,v,value\n";
        for (std::size_t m = 0; m < steps.size(); ++m) {
            const Tensor& t = steps[m];
            for (std::size_t s = 0; s < t.shape()[0]; ++s) {
                for (std::size_t v = 0; v < t.shape()[1]; ++v) {
                    os << m + 1 << "," << s << "," << v << "," << num(t.at(s, v)) << "\n";
                }
            }
        }
        finish(os, path);
    };
    dump("a_m.csv", st.forget);
    dump("amp.csv", st.amplitude);
    if (!st.phase.empty()) {
        dump("phase.csv", st.phase);
    }
    const fs::path path = dir / "omega.csv";
    auto os = open_out(path);
    os << "v,omega_base,delta_omega,omega\n";
    const Tensor base = omega_base(mc.V);
    for (std::size_t v = 0; v < mc.V; ++v) {
        os << v << "," << num(base[v]) << "," << num(st.delta_omega[v]) << "," << num(st.omega[v]) << "\n";
    }
    finish(os, path);
    out << "run " << dir.string() << "\n";
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"afgm: adaptive frequency-gated state-space forecaster", "afgm"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    std::string config, split_name = "test", cases = "I,II,IV,amp_phase,phase_only";
    std::vector<std::string> sets, grid;
    CheckpointArgs ck;
    std::size_t limit = 0, window = 0, channel = 0, block = 0, repeats = 5;
    bool toy = false;
    double h = 1e-5, tol = 1e-4;
    std::vector<std::size_t> Ms{64, 128, 256, 512, 1024}, Ss{16}, Vs{16};
    std::uint64_t bench_seed = 1;

    auto* train = app.add_subcommand("train", "Train a model; --grid expands to one run per combination");
    train->add_option("--config", config, "Config file of key = value lines");
    train->add_option("--set", sets, "Override one key: --set key=value (repeatable)");
    train->add_option("--grid", grid, "Sweep one key: --grid key=a,b,c (repeatable; cartesian product)");

    auto* eval = app.add_subcommand("eval", "Write MSE/MAE of a checkpoint on one split to metrics.csv");
    add_checkpoint_options(eval, ck);
    eval->add_option("--split", split_name, "train | val | test")->capture_default_str();

    auto* predict = app.add_subcommand("predict", "Write raw-scale forecasts for one split to predictions.csv");
    add_checkpoint_options(predict, ck);
    predict->add_option("--split", split_name, "train | val | test")->capture_default_str();
    predict->add_option("--limit", limit, "Write at most this many windows (0 = all)")->capture_default_str();

    auto* gradcheck = app.add_subcommand("gradcheck", "Compare backward-pass gradients with central differences");
    gradcheck->add_option("--config", config, "Config file of key = value lines");
    gradcheck->add_option("--set", sets, "Override one key: --set key=value (repeatable)");
    gradcheck->add_flag("--toy", toy, "Use the small T=24 H=6 D=2 V=S=4 configuration");
    gradcheck->add_option("--step", h, "Finite-difference step h")->capture_default_str();
    gradcheck->add_option("--tol", tol, "Max relative error per tensor")->capture_default_str();

    auto* bench = app.add_subcommand("bench", "Time one inference scan over a grid of (M, S, V)");
    bench->add_option("--M", Ms, "Patch counts")->delimiter(',')->capture_default_str();
    bench->add_option("--S", Ss, "Frequency widths")->delimiter(',')->capture_default_str();
    bench->add_option("--V", Vs, "Hidden widths")->delimiter(',')->capture_default_str();
    bench->add_option("--repeats", repeats, "Timed repetitions per point (median reported)")->capture_default_str();
    bench->add_option("--seed", bench_seed, "Seed for the random inputs")->capture_default_str();

    auto* ablate = app.add_subcommand("ablate", "Train each ablation case with shared seed and data");
    ablate->add_option("--config", config, "Config file of key = value lines");
    ablate->add_option("--set", sets, "Override one key: --set key=value (repeatable)");
    ablate->add_option("--cases", cases, "Comma list from I, II, IV, amp_only, amp_phase, phase_only, fixed_omega")
        ->capture_default_str();

    auto* inspect = app.add_subcommand("inspect-freq", "Dump per-step A_m, amplitude and omega for one window");
    add_checkpoint_options(inspect, ck);
    inspect->add_option("--split", split_name, "train | val | test")->capture_default_str();
    inspect->add_option("--window", window, "Window index within the split")->capture_default_str();
    inspect->add_option("--channel", channel, "Variable index")->capture_default_str();
    inspect->add_option("--block", block, "Block index")->capture_default_str();

    app.footer("Config keys: " + [] {
        std::string s;
        for (const auto& k : RunConfig::keys()) {
            s += (s.empty() ? "" : ", ") + k;
        }
        return s;
    }() + "\nRun directories go under $AFGM_RUNS_DIR (default ./runs).\n"
          "Exit codes: 0 ok, 2 config/usage, 3 numeric fault, 4 I/O.");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (train->parsed()) {
            return cmd_train(config, sets, grid, out, err);
        }
        if (eval->parsed()) {
            return cmd_eval(ck, split_name, out, err);
        }
        if (predict->parsed()) {
            return cmd_predict(ck, split_name, limit, out, err);
        }
        if (gradcheck->parsed()) {
            return cmd_gradcheck(config, sets, toy, h, tol, out, err);
        }
        if (bench->parsed()) {
            return cmd_bench(Ms, Ss, Vs, repeats, bench_seed, out);
        }
        if (ablate->parsed()) {
            return cmd_ablate(config, sets, cases, out, err);
        }
        if (inspect->parsed()) {
            return cmd_inspect(ck, split_name, window, channel, block, out, err);
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const DimensionError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const NumericFault& e) {
        err << "numeric fault: " << e.what() << "\n";
        return kNumeric;
    } catch (const DomainError& e) {
        err << "numeric fault: " << e.what() << "\n";
        return kNumeric;
    } catch (const IngestionError& e) {
        err << "input error: " << e.what() << "\n";
        return kIo;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << "\n";
        return kIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kIo;
    }
    return kConfig;
}

}  // namespace afgm::cli
