#include "cabfare/cli.hpp"

int main(int argc, char** argv) { return cabfare::cli::run({argv, argv + argc}); }
