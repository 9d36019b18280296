#include "hola/cli.hpp"

int main(int argc, char** argv) { return hola::cli_dispatch(std::vector<std::string>(argv + 1, argv + argc)); }
