#include "fixtures.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace fixture {

std::string temp_dir(const std::string& name) {
    const auto p = fs::path(GRIDGUARD_TEST_TMP) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const std::string& path, const std::string& text) {
    fs::create_directories(fs::path(path).parent_path());
    std::ofstream(path, std::ios::binary) << text;
}

std::string grids_dir() { return std::string(GRIDGUARD_DATA_DIR) + "/grids"; }

std::vector<gridguard::GridModel> feeders() {
    return {gridguard::load_grid_file(grids_dir() + "/feeder_a.json"),
            gridguard::load_grid_file(grids_dir() + "/feeder_b.json")};
}

gridguard::GridModel two_bus(double r, double x) {
    gridguard::GridModel g;
    g.name = "two_bus";
    g.base_mva = 1.0;
    g.buses = {{"b0", gridguard::BusKind::Slack, 10.0}, {"b1", gridguard::BusKind::PQ, 0.4}};
    g.lines = {{"b0", "b1", r, x}};
    return g;
}

gridguard::ExperimentConfig desk_config(const std::string& dir) {
    gridguard::ExperimentConfig c;
    c.base_directory = dir;
    c.paths.grid_data_folder = grids_dir();
    c.paths.raw_data_folder = "raw";
    c.paths.results_folder = "results";
    c.learning.dataset = "desk";
    c.learning.classifier = "logistic";
    c.learning.k_folds = 1;
    c.learning.plot_samples = true;
    c.dataset.raw_data_available = false;
    c.dataset.sample_length = 96;
    c.dataset.number_of_samples = 200000;
    c.simulation.parallel_computing = false;
    c.simulation.cores = 1;
    c.simulation.sim_length = 14;
    c.simulation.substation_days = 4;
    c.simulation.substation_step_size = 15;
    c.simulation.substation_window_minutes = 360;
    c.simulation.master_seed = 11;
    return c;
}

}  // namespace fixture
