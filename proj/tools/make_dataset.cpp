// Writes a deterministic synthetic dataset in CIFAR-10 binary layout, for use
// with dataset format "cifar10" or as a parser fixture.
#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "advlab/data_io.hpp"
#include "advlab/synth.hpp"

int main(int argc, char** argv) {
    CLI::App app{"synthetic CIFAR-10-format dataset writer"};
    std::string out_path;
    int count = 512;
    std::uint64_t seed = 1;
    app.add_option("out", out_path, "output file")->required();
    app.add_option("--count", count, "number of records");
    app.add_option("--seed", seed, "generator seed");
    CLI11_PARSE(app, argc, argv);

    try {
        advlab::write_file(out_path, advlab::make_synthetic_cifar_bytes(count, seed));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    std::cout << "wrote " << count << " records to " << out_path << '\n';
    return 0;
}
