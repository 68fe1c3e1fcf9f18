#include "scenegnn/cli.hpp"

int main(int argc, char** argv) { return scenegnn::cli::run(argc, argv); }
