#include "fraudfuse/cli.hpp"

int main(int argc, char** argv) { return fraudfuse::run_cli(argc, argv); }
