#include <cstdlib>
#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  cpf::cli::RunEnv env;
  if (const char* salt = std::getenv("CPF_SALT")) env.salt = salt;
  return cpf::cli::run(args, std::cout, std::cerr, env);
}
