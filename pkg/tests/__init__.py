# Tests for the multiroot package
