#include "archbert/cli.hpp"

int main(int argc, char** argv) { return archbert::run(argc, argv); }
