// Write the deterministic demo corpus (data files + manifest) into a
// directory, so the CLI can be exercised without network access.

#include <iostream>
#include <string>

#include <faircorpus/demo.hpp>

int main(int argc, char** argv) {
    std::string dir = "demo-corpus";
    if (argc > 2) {
        std::cerr << "usage: " << argv[0] << " [output-dir]\n";
        return 1;
    }
    if (argc == 2) dir = argv[1];
    try {
        const auto corpus = faircorpus::demo::write_demo_corpus(dir);
        std::cout << corpus.manifest_path.string() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
