fn main() {
    equimeasure::cli::main_exit()
}
