#include "adm/config.hpp"

#include "adm/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace adm {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key)
{
    return path.empty() ? key : path + "." + key;
}

// Typed view of one JSON object that remembers which keys were consumed.
class Section {
public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path))
    {
        if (!node_.is_object()) {
            throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
        }
    }

    bool has(const std::string& key) const { return node_.contains(key) && !node_.at(key).is_null(); }

    const json* raw(const std::string& key)
    {
        seen_.insert(key);
        return has(key) ? &node_.at(key) : nullptr;
    }

    Section child(const std::string& key)
    {
        const json* v = raw(key);
        if (!v) {
            return Section(empty_object(), join(path_, key));
        }
        return Section(*v, join(path_, key));
    }

    double real(const std::string& key, double fallback)
    {
        const json* v = raw(key);
        if (!v) {
            return fallback;
        }
        if (!v->is_number()) {
            throw ConfigError(join(path_, key), "expected a number");
        }
        return v->get<double>();
    }

    int integer(const std::string& key, int fallback)
    {
        const json* v = raw(key);
        if (!v) {
            return fallback;
        }
        if (!v->is_number_integer()) {
            throw ConfigError(join(path_, key), "expected an integer");
        }
        const auto x = v->get<std::int64_t>();
        if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
            throw ConfigError(join(path_, key), "integer out of range");
        }
        return static_cast<int>(x);
    }

    std::uint64_t seed(const std::string& key, std::uint64_t fallback)
    {
        const json* v = raw(key);
        if (!v) {
            return fallback;
        }
        if (v->is_number_unsigned()) {
            return v->get<std::uint64_t>();
        }
        throw ConfigError(join(path_, key), "expected a non-negative integer");
    }

    bool boolean(const std::string& key, bool fallback)
    {
        const json* v = raw(key);
        if (!v) {
            return fallback;
        }
        if (!v->is_boolean()) {
            throw ConfigError(join(path_, key), "expected true or false");
        }
        return v->get<bool>();
    }

    std::string text(const std::string& key, const std::string& fallback)
    {
        const json* v = raw(key);
        if (!v) {
            return fallback;
        }
        if (!v->is_string()) {
            throw ConfigError(join(path_, key), "expected a string");
        }
        return v->get<std::string>();
    }

    const std::string& path() const { return path_; }

    /// Rejects keys nobody asked for, which are almost always typos.
    void finish() const
    {
        for (const auto& [key, value] : node_.items()) {
            if (!seen_.count(key)) {
                throw ConfigError(join(path_, key), "unknown key");
            }
        }
    }

private:
    static const json& empty_object()
    {
        static const json obj = json::object();
        return obj;
    }

    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

[[noreturn]] void fail(const std::string& key, const std::string& msg)
{
    throw ConfigError(key, msg);
}

void require(bool ok, const std::string& key, const std::string& msg)
{
    if (!ok) {
        fail(key, msg);
    }
}

EstimatorForm parse_form(const std::string& s, const std::string& key)
{
    if (s == "dense") {
        return EstimatorForm::dense;
    }
    if (s == "factored") {
        return EstimatorForm::factored;
    }
    fail(key, "expected \"dense\" or \"factored\", got \"" + s + "\"");
}

std::string form_name(EstimatorForm f)
{
    return f == EstimatorForm::dense ? "dense" : "factored";
}

}  // namespace

void ExperimentConfig::validate() const
{
    require(!output_dir.empty(), "output_dir", "must not be empty");

    require(grid.width_px > 0, "grid.width_px", "must be positive");
    require(grid.height_px > 0, "grid.height_px", "must be positive");
    require(grid.diameter_px > 0.0, "grid.diameter_px", "must be positive");
    require(grid.pixel_pitch_um > 0.0, "grid.pixel_pitch_um", "must be positive");
    require(grid.diameter_px <= std::min(grid.width_px, grid.height_px), "grid.diameter_px",
            "exceeds min(width_px, height_px)");
    require(grid.center_x_px >= 0.0 && grid.center_x_px <= grid.width_px - 1 && grid.center_y_px >= 0.0 &&
                grid.center_y_px <= grid.height_px - 1,
            "grid.center_px", "must lie inside the image");
    const auto pixels = static_cast<long>(grid.aperture_pixels().size());
    require(pixels > 0, "grid", "aperture contains no pixel centers");

    require(n_modes >= 1, "n_modes", "must be >= 1");
    require(n_modes <= pixels, "n_modes",
            std::to_string(n_modes) + " modes exceed the " + std::to_string(pixels) + " aperture pixels");
    require(theta_assumed > 0.0, "theta_assumed", "must be positive");

    require(layout.grid_rows > 0, "plant.layout.rows", "must be positive");
    require(layout.grid_cols > 0, "plant.layout.cols", "must be positive");
    require(layout.pitch_um > 0.0, "plant.layout.pitch_um", "must be positive");
    for (std::size_t i = 0; i < layout.inactive.size(); ++i) {
        const auto [r, c] = layout.inactive[i];
        require(r >= 0 && r < layout.grid_rows && c >= 0 && c < layout.grid_cols,
                "plant.layout.inactive[" + std::to_string(i) + "]", "site is outside the actuator grid");
    }
    const int m = layout.count();
    require(m > 0, "plant.layout", "no active actuators");
    require(s_probes >= m, "s_probes",
            "s_probes = " + std::to_string(s_probes) + " < m = " + std::to_string(m) +
                "; batch initialization needs at least one probe per actuator (s >= m)");

    require(theta_true > 0.0, "plant.theta_true", "must be positive");
    require(stroke_um > 0.0, "plant.stroke_um", "must be positive");
    require(influence_sigma_um > 0.0, "plant.influence_sigma_um", "must be positive");
    require(coupling_gamma >= 0.0, "plant.coupling_gamma", "must be >= 0");
    require(noise_sigma_um >= 0.0, "plant.noise_sigma_um", "must be >= 0");
    if (drift) {
        require(drift->onset >= 0, "plant.drift.onset", "must be >= 0");
        require(std::isfinite(drift->multiplier) && drift->multiplier >= 0.0, "plant.drift.multiplier",
                "must be finite and >= 0");
        require(drift->rows >= 1 && drift->cols >= 1, "plant.drift.block", "rows and cols must be >= 1");
        require(drift->row >= 0 && drift->col >= 0 && drift->row + drift->rows <= layout.grid_rows &&
                    drift->col + drift->cols <= layout.grid_cols,
                "plant.drift.block", "block extends beyond the actuator grid");
    }

    require(iterations >= 1, "loop.iterations", "must be >= 1");
    require(beta > 0.0 && beta <= 1.0, "loop.beta", "must lie in (0, 1]");
    require(delta > 0.0 && std::isfinite(delta), "loop.delta", "must be positive");
    require(crop_fraction > 0.0 && crop_fraction <= 1.0, "loop.crop_fraction", "must lie in (0, 1]");
    require(bvls.tol > 0.0, "loop.bvls_tol", "must be positive");
    require(bvls.max_iter >= 0, "loop.bvls_max_iter", "must be >= 0");

    require(target.pv_um >= 0.0, "target.pv_um", "must be >= 0");
    int noll = 0;
    try {
        noll = parse_mode_name(target.mode);
    } catch (const DomainError& e) {
        fail("target.mode", e.what());
    }
    require(noll >= 2, "target.mode", "piston cannot be the target mode");
    require(noll <= n_modes, "target.mode",
            target.mode + " is Noll index " + std::to_string(noll) + ", outside the " + std::to_string(n_modes) +
                "-mode basis");

    require(!n_list.empty(), "sweep.n_list", "must not be empty");
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        require(n_list[i] >= 1 && n_list[i] <= pixels, "sweep.n_list[" + std::to_string(i) + "]",
                "must lie in [1, aperture pixels]");
    }
}

PlantConfig ExperimentConfig::plant_config() const
{
    PlantConfig p;
    p.layout = layout;
    p.theta_true = theta_true;
    p.stroke_um = stroke_um;
    p.influence_sigma_um = influence_sigma_um;
    p.coupling_gamma = coupling_gamma;
    p.noise_sigma_um = noise_sigma_um;
    p.seed = plant_seed;
    if (drift) {
        p.drift = DriftSchedule::block_step(layout, drift->onset, drift->row, drift->col, drift->rows, drift->cols,
                                            drift->multiplier);
    }
    return p;
}

LoopConfig ExperimentConfig::loop_config() const
{
    LoopConfig l;
    l.iterations = iterations;
    l.beta = beta;
    l.delta = delta;
    l.estimator_form = estimator;
    l.crop_fraction = crop_fraction;
    l.record_checkpoints = record_checkpoints;
    l.theta_assumed = theta_assumed;
    l.bvls = bvls;
    return l;
}

int ExperimentConfig::target_noll() const
{
    return parse_mode_name(target.mode);
}

ExperimentConfig parse_config(const std::string& json_text)
{
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
    }
    ExperimentConfig c;
    Section root(doc, "");
    c.seed = root.seed("seed", c.seed);
    c.output_dir = root.text("output_dir", c.output_dir);
    c.n_modes = root.integer("n_modes", c.n_modes);
    c.s_probes = root.integer("s_probes", c.s_probes);
    c.theta_assumed = root.real("theta_assumed", c.theta_assumed);

    {
        Section g = root.child("grid");
        c.grid.width_px = g.integer("width_px", c.grid.width_px);
        c.grid.height_px = g.integer("height_px", c.grid.height_px);
        c.grid.diameter_px = g.real("diameter_px", c.grid.diameter_px);
        c.grid.pixel_pitch_um = g.real("pixel_pitch_um", c.grid.pixel_pitch_um);
        c.grid.center_x_px = 0.5 * (c.grid.width_px - 1);
        c.grid.center_y_px = 0.5 * (c.grid.height_px - 1);
        if (const json* center = g.raw("center_px")) {
            if (!center->is_array() || center->size() != 2 || !(*center)[0].is_number() ||
                !(*center)[1].is_number()) {
                fail("grid.center_px", "expected [x, y]");
            }
            c.grid.center_x_px = (*center)[0].get<double>();
            c.grid.center_y_px = (*center)[1].get<double>();
        }
        g.finish();
    }

    {
        Section p = root.child("plant");
        {
            Section l = p.child("layout");
            c.layout.grid_rows = l.integer("rows", c.layout.grid_rows);
            c.layout.grid_cols = l.integer("cols", c.layout.grid_cols);
            c.layout.pitch_um = l.real("pitch_um", c.layout.pitch_um);
            if (const json* inactive = l.raw("inactive")) {
                if (!inactive->is_array()) {
                    fail("plant.layout.inactive", "expected a list of [row, col] pairs");
                }
                c.layout.inactive.clear();
                for (std::size_t i = 0; i < inactive->size(); ++i) {
                    const json& site = (*inactive)[i];
                    if (!site.is_array() || site.size() != 2 || !site[0].is_number_integer() ||
                        !site[1].is_number_integer()) {
                        fail("plant.layout.inactive[" + std::to_string(i) + "]", "expected [row, col]");
                    }
                    c.layout.inactive.emplace_back(site[0].get<int>(), site[1].get<int>());
                }
            } else {
                c.layout.inactive = {{0, 0},
                                     {0, c.layout.grid_cols - 1},
                                     {c.layout.grid_rows - 1, 0},
                                     {c.layout.grid_rows - 1, c.layout.grid_cols - 1}};
            }
            l.finish();
        }
        c.theta_true = p.real("theta_true", c.theta_true);
        c.stroke_um = p.real("stroke_um", c.stroke_um);
        c.influence_sigma_um = p.real("influence_sigma_um", c.influence_sigma_um);
        c.coupling_gamma = p.real("coupling_gamma", c.coupling_gamma);
        c.noise_sigma_um = p.real("noise_sigma_um", c.noise_sigma_um);
        c.plant_seed = p.seed("seed", c.seed);
        if (p.has("drift")) {
            Section d = p.child("drift");
            DriftConfig drift;
            drift.onset = d.integer("onset", drift.onset);
            drift.multiplier = d.real("multiplier", drift.multiplier);
            Section b = d.child("block");
            drift.row = b.integer("row", drift.row);
            drift.col = b.integer("col", drift.col);
            drift.rows = b.integer("rows", drift.rows);
            drift.cols = b.integer("cols", drift.cols);
            b.finish();
            d.finish();
            c.drift = drift;
        } else {
            p.raw("drift");
        }
        p.finish();
    }

    {
        Section l = root.child("loop");
        c.iterations = l.integer("iterations", c.iterations);
        c.beta = l.real("beta", c.beta);
        c.delta = l.real("delta", c.delta);
        c.estimator = parse_form(l.text("estimator", form_name(c.estimator)), "loop.estimator");
        c.crop_fraction = l.real("crop_fraction", c.crop_fraction);
        c.record_checkpoints = l.boolean("record_checkpoints", c.record_checkpoints);
        c.bvls.tol = l.real("bvls_tol", c.bvls.tol);
        c.bvls.max_iter = l.integer("bvls_max_iter", c.bvls.max_iter);
        l.finish();
    }

    {
        Section t = root.child("target");
        c.target.mode = t.text("mode", c.target.mode);
        c.target.pv_um = t.real("pv_um", c.target.pv_um);
        c.target.piston_um = t.real("piston_um", c.target.piston_um);
        t.finish();
    }

    {
        Section s = root.child("sweep");
        if (const json* list = s.raw("n_list")) {
            if (!list->is_array()) {
                fail("sweep.n_list", "expected a list of integers");
            }
            c.n_list.clear();
            for (std::size_t i = 0; i < list->size(); ++i) {
                if (!(*list)[i].is_number_integer()) {
                    fail("sweep.n_list[" + std::to_string(i) + "]", "expected an integer");
                }
                c.n_list.push_back((*list)[i].get<int>());
            }
        }
        s.finish();
    }
    root.finish();

    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c)
{
    json inactive = json::array();
    for (const auto& [r, col] : c.layout.inactive) {
        inactive.push_back({r, col});
    }
    json plant = {
        {"layout",
         {{"rows", c.layout.grid_rows},
          {"cols", c.layout.grid_cols},
          {"pitch_um", c.layout.pitch_um},
          {"inactive", inactive}}},
        {"theta_true", c.theta_true},
        {"stroke_um", c.stroke_um},
        {"influence_sigma_um", c.influence_sigma_um},
        {"coupling_gamma", c.coupling_gamma},
        {"noise_sigma_um", c.noise_sigma_um},
        {"seed", c.plant_seed},
        {"drift", nullptr},
    };
    if (c.drift) {
        plant["drift"] = {
            {"onset", c.drift->onset},
            {"multiplier", c.drift->multiplier},
            {"block", {{"row", c.drift->row}, {"col", c.drift->col}, {"rows", c.drift->rows}, {"cols", c.drift->cols}}},
        };
    }
    const json doc = {
        {"seed", c.seed},
        {"output_dir", c.output_dir},
        {"grid",
         {{"width_px", c.grid.width_px},
          {"height_px", c.grid.height_px},
          {"center_px", {c.grid.center_x_px, c.grid.center_y_px}},
          {"diameter_px", c.grid.diameter_px},
          {"pixel_pitch_um", c.grid.pixel_pitch_um}}},
        {"n_modes", c.n_modes},
        {"s_probes", c.s_probes},
        {"theta_assumed", c.theta_assumed},
        {"plant", plant},
        {"loop",
         {{"iterations", c.iterations},
          {"beta", c.beta},
          {"delta", c.delta},
          {"estimator", form_name(c.estimator)},
          {"crop_fraction", c.crop_fraction},
          {"record_checkpoints", c.record_checkpoints},
          {"bvls_tol", c.bvls.tol},
          {"bvls_max_iter", c.bvls.max_iter}}},
        {"target", {{"mode", c.target.mode}, {"pv_um", c.target.pv_um}, {"piston_um", c.target.piston_um}}},
        {"sweep", {{"n_list", c.n_list}}},
    };
    return doc.dump(2) + "\n";
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b)
{
    return a.seed == b.seed && a.output_dir == b.output_dir && a.grid == b.grid && a.n_modes == b.n_modes &&
           a.s_probes == b.s_probes && a.theta_assumed == b.theta_assumed && a.layout == b.layout &&
           a.theta_true == b.theta_true && a.stroke_um == b.stroke_um &&
           a.influence_sigma_um == b.influence_sigma_um && a.coupling_gamma == b.coupling_gamma &&
           a.noise_sigma_um == b.noise_sigma_um && a.drift == b.drift && a.plant_seed == b.plant_seed &&
           a.iterations == b.iterations && a.beta == b.beta && a.delta == b.delta && a.estimator == b.estimator &&
           a.crop_fraction == b.crop_fraction && a.record_checkpoints == b.record_checkpoints &&
           a.bvls.tol == b.bvls.tol && a.bvls.max_iter == b.bvls.max_iter && a.target == b.target &&
           a.n_list == b.n_list;
}

}  // namespace adm
