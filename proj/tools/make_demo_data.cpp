// Emits the bundled demo datasets (CSV + schema JSON) used by the README
// walkthrough and the acceptance suite.

#include <iostream>
#include <string>

#include "support/demo_data.hpp"
#include "tabaug/csv.hpp"

int main(int argc, char** argv) {
    std::string out_dir = ".";
    std::uint64_t seed = 20250801;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--out" && i + 1 < argc) {
            out_dir = argv[++i];
        } else if (arg == "--seed" && i + 1 < argc) {
            seed = std::stoull(argv[++i]);
        } else {
            std::cerr << "usage: make_demo_data [--out DIR] [--seed N]\n";
            return 2;
        }
    }
    const tabaug::Table primary = tabaug::demo::make_primary(seed);
    const tabaug::Table aux = tabaug::demo::make_auxiliary(seed);
    tabaug::write_csv_file(out_dir + "/demo_primary.csv", primary);
    tabaug::write_schema_file(out_dir + "/demo_primary.schema.json", primary.schema());
    tabaug::write_csv_file(out_dir + "/demo_auxiliary.csv", aux);
    tabaug::write_schema_file(out_dir + "/demo_auxiliary.schema.json", aux.schema());
    std::cout << "wrote demo datasets (" << primary.n_rows() << " + " << aux.n_rows()
              << " rows) to " << out_dir << "\n";
    return 0;
}
