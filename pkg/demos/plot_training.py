"""
Training one network per lost bitplane
======================================

A desk-scale run: 4 -> 8 bits on a small synthetic corpus, one D=1 network
per plane, a few epochs each.  Takes a couple of minutes on one core.
"""

from bitrecover import RecoveryRange
from bitrecover.dataio import generate_synthetic
from bitrecover.pipeline import TrainConfig, epoch_means, train_all

corpus = generate_synthetic(32, 64, 8, seed=1)
rrange = RecoveryRange(4, 8)

# 32x32 patches, batch 16, learning rate divided by 5 after epoch 4
config = TrainConfig(depth=1, patch_size=32, batch_size=16, epochs=8, lr_drop_epoch=4)

bundle = train_all(corpus, rrange, config)

# each network saw the ground truth quantized one step above its plane
for net in bundle.networks:
    means = epoch_means(net.training_log)
    print(f"plane {net.plane_index} input {net.input_bits} bits  "
          "BCE " + " ".join(f"{m:.4f}" for m in means))

bundle.save("toy_bundle")
print("saved to toy_bundle/")
