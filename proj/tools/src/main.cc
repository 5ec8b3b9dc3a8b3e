#include <csignal>
#include <iostream>

#include "wildloc_cli/dispatch.h"

int main(int argc, char** argv) {
  std::signal(SIGPIPE, SIG_IGN);
  return wildloc::cli::Dispatch(argc, argv, std::cout, std::cerr);
}
