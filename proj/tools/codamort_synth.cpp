// Writes synthetic HMD-layout fixture files so the pipeline can be
// exercised without redistributing real mortality data.

#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "codamort/synthetic.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Generate synthetic Mx_1x1/Exposures_1x1 fixture files"};
    std::string out_dir = "fixtures";
    std::vector<std::string> codes = {"SYN1", "SYN2"};
    unsigned seed = 20240901;
    app.add_option("--out", out_dir, "Destination directory");
    app.add_option("--countries", codes, "Country codes to synthesize");
    app.add_option("--seed", seed, "Base RNG seed");
    CLI11_PARSE(app, argc, argv);

    for (std::size_t i = 0; i < codes.size(); ++i) {
        codamort::SyntheticSpec spec;
        spec.country = codes[i];
        spec.seed = seed + 1000 * static_cast<unsigned>(i);
        codamort::write_hmd_fixture(out_dir, spec);
        std::cout << "wrote " << out_dir << "/" << codes[i] << ".Mx_1x1.txt and .Exposures_1x1.txt\n";
    }
    return 0;
}
