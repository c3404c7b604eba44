# CropGAN test suite
